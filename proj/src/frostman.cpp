#include "stlab/frostman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace stlab {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Sums a level array one level up, children added pairwise along each axis.
std::vector<double> coarsen(int dim, int level, const std::vector<double>& fine) {
  std::vector<double> out(level_size(dim, level - 1), 0.0);
  const std::size_t fan = std::size_t{1} << dim;
  for (std::size_t lin = 0; lin < out.size(); ++lin) {
    const Index m = unlinear(dim, level - 1, lin);
    double sums[8];
    for (std::size_t b = 0; b < fan; ++b) {
      Index c{};
      for (int i = 0; i < dim; ++i) c[i] = 2 * m[i] + static_cast<std::int64_t>((b >> (dim - 1 - i)) & 1u);
      sums[b] = fine[linear_index(dim, level, c)];
    }
    for (std::size_t width = fan; width > 1; width /= 2)
      for (std::size_t b = 0; b < width / 2; ++b) sums[b] = sums[2 * b] + sums[2 * b + 1];
    out[lin] = sums[0];
  }
  return out;
}

std::size_t ancestor_linear(int dim, int resolution, std::size_t leaf, int level) {
  Index m = unlinear(dim, resolution, leaf);
  for (int i = 0; i < dim; ++i) m[i] >>= (resolution - level);
  return linear_index(dim, level, m);
}

}  // namespace

FrostmanSequence::FrostmanSequence(int dim, int resolution, double d,
                                   std::vector<std::vector<double>> weights)
    : dim_(dim), resolution_(resolution), d_(d), weights_(std::move(weights)) {
  if (weights_.empty()) throw Error("empty measure sequence");
  for (const auto& w : weights_)
    if (w.size() != level_size(dim, resolution)) throw Error("weight vector has wrong size");
}

double FrostmanSequence::total_mass(int k) const { return level_masses(k, 0)[0]; }

double FrostmanSequence::mass(int k, const DyadicCube& q) const {
  if (q.level > resolution_ || !in_unit_cube(q)) return 0.0;
  const int shift = resolution_ - q.level;
  Index lo{}, hi{};
  for (int i = 0; i < dim_; ++i) {
    lo[i] = q.index[i] << shift;
    hi[i] = (q.index[i] + 1) << shift;
  }
  double total = 0.0;
  const auto& w = weights_[k];
  for_each_index(dim_, lo, hi, [&](const Index& m) { total += w[linear_index(dim_, resolution_, m)]; });
  return total;
}

std::vector<double> FrostmanSequence::level_masses(int k, int level) const {
  std::vector<double> cur = weights_[k];
  for (int j = resolution_; j > level; --j) cur = coarsen(dim_, j, cur);
  return cur;
}

double FrostmanSequence::density(int k, std::size_t leaf) const {
  const double base = weights_[0][leaf];
  return base > 0.0 ? weights_[k][leaf] / base : 0.0;
}

double FrostmanSequence::average(int k, const DyadicCube& q, const std::vector<double>& values) const {
  if (q.level > resolution_ || !in_unit_cube(q)) return 0.0;
  const int shift = resolution_ - q.level;
  Index lo{}, hi{};
  for (int i = 0; i < dim_; ++i) {
    lo[i] = q.index[i] << shift;
    hi[i] = (q.index[i] + 1) << shift;
  }
  double mass = 0.0, moment = 0.0;
  const auto& w = weights_[k];
  for_each_index(dim_, lo, hi, [&](const Index& m) {
    const std::size_t lin = linear_index(dim_, resolution_, m);
    mass += w[lin];
    moment += w[lin] * values[lin];
  });
  return mass > 0.0 ? moment / mass : 0.0;
}

FrostmanSequence build_sequence(const DyadicSet& s, double d, int kmax) {
  const int n = s.dim(), K = s.resolution();
  if (!(d >= 0.0) || d > n) throw Error("measure exponent must lie in [0, n]");
  if (kmax < 0) kmax = std::max(K - 2, 0);
  if (kmax > K) throw Error("kmax exceeds the leaf level");

  // Rescaling factors of every cube whose children carry more than l^d.
  const double leaf_mass = std::exp2(-static_cast<double>(K) * d);
  std::vector<std::vector<double>> factor(static_cast<std::size_t>(K) + 1);
  std::vector<double> capped(s.leaf_count());
  for (std::size_t i = 0; i < capped.size(); ++i) capped[i] = s.is_marked(i) ? leaf_mass : 0.0;
  for (int j = K - 1; j >= 0; --j) {
    std::vector<double> sums = coarsen(n, j + 1, capped);
    const double cap = std::exp2(-static_cast<double>(j) * d);
    factor[j].assign(sums.size(), 1.0);
    for (std::size_t lin = 0; lin < sums.size(); ++lin) {
      if (sums[lin] > cap) {
        factor[j][lin] = cap / sums[lin];
        sums[lin] = cap;
      }
    }
    capped = std::move(sums);
  }

  std::vector<std::vector<double>> weights(static_cast<std::size_t>(kmax) + 1);
  std::vector<double> scale(s.leaf_count(), 1.0);
  for (int j = K - 1; j >= 0; --j) {
    if (j < K) {
      for (std::size_t leaf = 0; leaf < scale.size(); ++leaf) {
        if (!s.is_marked(leaf)) continue;
        scale[leaf] *= factor[j][ancestor_linear(n, K, leaf, j)];
      }
    }
    if (j <= kmax) {
      auto& w = weights[j];
      w.assign(s.leaf_count(), 0.0);
      for (std::size_t leaf = 0; leaf < w.size(); ++leaf)
        if (s.is_marked(leaf)) w[leaf] = leaf_mass * scale[leaf];
    }
  }
  if (kmax == K) {
    auto& w = weights[K];
    w.assign(s.leaf_count(), 0.0);
    for (std::size_t leaf = 0; leaf < w.size(); ++leaf)
      if (s.is_marked(leaf)) w[leaf] = leaf_mass;
  }
  return FrostmanSequence(n, K, d, std::move(weights));
}

double cube_measure(const FrostmanSequence& seq, int k, const Point& corner, double side) {
  const int n = seq.dim(), K = seq.resolution();
  const double h = std::ldexp(1.0, -K);
  const std::int64_t cells = std::int64_t{1} << K;
  Index lo{}, hi{};
  std::array<std::vector<double>, kMaxDim> frac;
  for (int i = 0; i < n; ++i) {
    const double a = corner[i], b = corner[i] + side;
    lo[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(a / h)), 0, cells);
    hi[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(b / h)), 0, cells);
    if (lo[i] >= hi[i]) return 0.0;
    for (std::int64_t t = lo[i]; t < hi[i]; ++t) {
      const double c0 = static_cast<double>(t) * h, c1 = c0 + h;
      frac[i].push_back(std::max(0.0, std::min(b, c1) - std::max(a, c0)) / h);
    }
  }
  double total = 0.0;
  const auto& w = seq.weights(k);
  for_each_index(n, lo, hi, [&](const Index& m) {
    const double mass = w[linear_index(n, K, m)];
    if (mass == 0.0) return;
    double f = 1.0;
    for (int i = 0; i < n; ++i) f *= frac[i][static_cast<std::size_t>(m[i] - lo[i])];
    total += mass * f;
  });
  return total;
}

FrostmanAudit audit_sequence(const FrostmanSequence& seq, const ContentTree& h, std::uint64_t seed,
                             std::size_t samples_per_level) {
  const int n = seq.dim(), K = seq.resolution(), kmax = seq.kmax();
  const double d = seq.d();
  FrostmanAudit a;
  a.c2 = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kmax; ++k) {
    std::vector<double> masses = seq.weights(k);
    for (int j = K; j >= k; --j) {
      if (j < K) masses = coarsen(n, j + 1, masses);
      const double cap = std::exp2(-static_cast<double>(j) * d);
      for (double m : masses) a.c1 = std::max(a.c1, m / cap);
      if (j == k) {
        const auto& hv = h.level_values(k);
        for (std::size_t lin = 0; lin < masses.size(); ++lin)
          if (hv[lin] > 0.0) a.c2 = std::min(a.c2, masses[lin] / hv[lin]);
      }
    }
  }

  a.c3 = 1.0;
  const auto& w0 = seq.weights(0);
  for (std::size_t leaf = 0; leaf < w0.size(); ++leaf) {
    if (w0[leaf] <= 0.0) continue;
    for (int k = 0; k <= kmax; ++k) {
      const double wk = seq.density(k, leaf);
      for (int j = 1; k + j <= kmax; ++j) {
        const double wkj = seq.density(k + j, leaf);
        const double lower = std::exp2((d - n) * j) * wkj / wk;
        const double upper = wk / wkj;
        a.c3 = std::max({a.c3, lower, upper});
      }
    }
  }
  if (!(a.c3 <= kC3Ceiling)) {
    a.c3 = kC3Ceiling;
    a.c3_capped = true;
  }

  std::mt19937_64 rng(seed);
  for (int k = 0; k <= kmax; ++k) {
    for (std::size_t t = 0; t < samples_per_level; ++t) {
      const double l = std::ldexp(1.0, -k) * (0.05 + 0.95 * uniform01(rng));
      Point corner{};
      for (int i = 0; i < n; ++i) corner[i] = -l + (1.0 + l) * uniform01(rng);
      const double m = cube_measure(seq, k, corner, l);
      a.arbitrary_cube = std::max(a.arbitrary_cube, m / std::pow(l, d));
      ++a.sampled_cubes;
    }
  }
  return a;
}

void write_sequence(std::ostream& out, const FrostmanSequence& seq) {
  const int n = seq.dim(), K = seq.resolution();
  out << "FROSTMAN v1 n=" << n << " K=" << K << " d=" << fmt17(seq.d()) << " kmax=" << seq.kmax() << '\n';
  for (int k = 0; k <= seq.kmax(); ++k) {
    const auto& w = seq.weights(k);
    for (std::size_t leaf = 0; leaf < w.size(); ++leaf) {
      if (seq.weights(0)[leaf] <= 0.0 && w[leaf] <= 0.0) continue;
      const Index m = unlinear(n, K, leaf);
      out << k;
      for (int i = 0; i < n; ++i) out << ' ' << m[i];
      out << ' ' << fmt17(w[leaf]) << '\n';
    }
  }
}

FrostmanSequence read_sequence(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("malformed header: empty input");
  int n = 0, K = 0, kmax = 0;
  char dbuf[64] = {0};
  if (std::sscanf(header.c_str(), "FROSTMAN v1 n=%d K=%d d=%63s kmax=%d", &n, &K, dbuf, &kmax) != 4)
    throw Error("malformed header: " + header);
  if (n < 1 || n > kMaxDim || K < 0 || n * K > 30 || kmax < 0 || kmax > K)
    throw Error("malformed header: " + header);
  const double d = std::stod(dbuf);
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(kmax) + 1,
                                           std::vector<double>(level_size(n, K), 0.0));
  const std::int64_t side = std::int64_t{1} << K;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int k = -1;
    Index m{};
    double mass = 0.0;
    if (!(ls >> k) || k < 0 || k > kmax) throw Error("malformed measure line: " + line);
    for (int i = 0; i < n; ++i)
      if (!(ls >> m[i]) || m[i] < 0 || m[i] >= side) throw Error("malformed measure line: " + line);
    if (!(ls >> mass)) throw Error("malformed measure line: " + line);
    weights[k][linear_index(n, K, m)] = mass;
  }
  return FrostmanSequence(n, K, d, std::move(weights));
}

}  // namespace stlab
