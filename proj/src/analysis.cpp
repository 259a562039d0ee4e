#include "stlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stlab {

PhiEngine::PhiEngine(const FrostmanSequence& seq, const std::vector<double>& f, std::size_t budget)
    : seq_(&seq), f_(&f), budget_(budget) {
  if (f.size() != level_size(seq.dim(), seq.resolution())) throw Error("function must have one value per leaf");
}

const PhiEngine::Samples& PhiEngine::samples(const DyadicCube& q) {
  if (!in_unit_cube(q) || q.level > seq_->kmax()) throw Error("cube outside the measured levels");
  const CubeKey key = cube_key(q);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const int n = seq_->dim(), K = seq_->resolution();
  const auto& w = seq_->weights(q.level);
  std::vector<std::pair<double, double>> items;
  const int shift = K - q.level;
  Index lo{}, hi{};
  for (int i = 0; i < n; ++i) {
    lo[i] = q.index[i] << shift;
    hi[i] = (q.index[i] + 1) << shift;
  }
  double total = 0.0;
  for_each_index(n, lo, hi, [&](const Index& m) {
    const std::size_t lin = linear_index(n, K, m);
    if (w[lin] > 0.0) {
      items.emplace_back((*f_)[lin], w[lin]);
      total += w[lin];
    }
  });
  std::sort(items.begin(), items.end());
  Samples s;
  s.value.reserve(items.size());
  s.weight.reserve(items.size());
  s.cum_weight.assign(items.size() + 1, 0.0);
  s.cum_moment.assign(items.size() + 1, 0.0);
  s.tail_weight.assign(items.size() + 1, 0.0);
  s.tail_moment.assign(items.size() + 1, 0.0);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double wi = items[i].second / total;
    s.value.push_back(items[i].first);
    s.weight.push_back(wi);
    s.cum_weight[i + 1] = s.cum_weight[i] + wi;
    s.cum_moment[i + 1] = s.cum_moment[i] + wi * items[i].first;
  }
  for (std::size_t i = items.size(); i-- > 0;) {
    s.tail_weight[i] = s.tail_weight[i + 1] + s.weight[i];
    s.tail_moment[i] = s.tail_moment[i + 1] + s.weight[i] * s.value[i];
  }
  return cache_.emplace(key, std::move(s)).first->second;
}

double PhiEngine::spread(const Samples& s, double t) {
  const auto idx = static_cast<std::size_t>(std::upper_bound(s.value.begin(), s.value.end(), t) - s.value.begin());
  const double w_le = s.cum_weight[idx], m_le = s.cum_moment[idx];
  const double w_gt = s.tail_weight[idx], m_gt = s.tail_moment[idx];
  return (t * w_le - m_le) + (m_gt - t * w_gt);
}

double PhiEngine::operator()(const DyadicCube& q1, const DyadicCube& q2) {
  ++evaluations_;
  const Samples& a = samples(q1);
  const Samples& b = samples(q2);
  if (a.value.empty() || b.value.empty()) return 0.0;
  const double scale = 1.0 / std::min(q1.side(), q2.side());
  double total = 0.0;
  if (a.value.size() * b.value.size() <= budget_) {
    for (std::size_t i = 0; i < a.value.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < b.value.size(); ++j) row += b.weight[j] * std::abs(a.value[i] - b.value[j]);
      total += a.weight[i] * row;
    }
  } else {
    ++sweeps_;
    const Samples& small = a.value.size() <= b.value.size() ? a : b;
    const Samples& large = a.value.size() <= b.value.size() ? b : a;
    for (std::size_t i = 0; i < small.value.size(); ++i) total += small.weight[i] * spread(large, small.value[i]);
  }
  return scale * std::max(total, 0.0);
}

double phi(const std::vector<double>& f, const DyadicCube& q1, const DyadicCube& q2,
           const FrostmanSequence& seq, std::size_t budget) {
  PhiEngine engine(seq, f, budget);
  return engine(q1, q2);
}

std::vector<std::vector<double>> sharp_cube_values(const std::vector<double>& f, const KeystoneIndex& ki,
                                                   const FrostmanSequence& seq, int c,
                                                   std::size_t budget, std::size_t* pairs) {
  if (c < 1 || c % 2 == 0) throw Error("dilation factor must be a positive odd integer");
  const int n = ki.dim();
  PhiEngine engine(seq, f, budget);
  std::vector<std::vector<double>> values(static_cast<std::size_t>(seq.kmax()) + 1);
  for (int k = 0; k <= seq.kmax(); ++k) {
    values[k].assign(level_size(n, k), 0.0);
    for (std::size_t lin : ki.thick_at(k)) {
      const DyadicCube lower = cube_at(n, k, lin);
      double best = 0.0;
      for (const auto& upper : covering_cubes(ki, lower, c)) best = std::max(best, engine(lower, upper));
      values[k][lin] = best;
    }
  }
  if (pairs) *pairs = engine.evaluations();
  return values;
}

SharpField sharp_field(const std::vector<double>& f, const KeystoneIndex& ki, const FrostmanSequence& seq,
                       int c, std::size_t budget) {
  const int n = ki.dim(), K = ki.resolution();
  SharpField out;
  out.c = c;
  const auto values = sharp_cube_values(f, ki, seq, c, budget, &out.pairs);
  out.lower_cubes = 0;
  for (int k = 0; k <= seq.kmax(); ++k) out.lower_cubes += ki.thick_at(k).size();

  const std::int64_t r = (c - 1) / 2;
  auto window_size = [&](int level) {
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(c) << level;
    return total;
  };
  auto window_linear = [&](int level, const Index& w) {
    std::size_t lin = 0;
    const auto side = static_cast<std::size_t>(c) << level;
    for (int i = 0; i < n; ++i) lin = lin * side + static_cast<std::size_t>(w[i]);
    return lin;
  };
  // Scatter each cube's value over the level-k cells of cQ, then push the
  // running maximum down one level at a time.
  std::vector<double> running;
  for (int k = 0; k <= seq.kmax(); ++k) {
    std::vector<double> painted(window_size(k), 0.0);
    const std::int64_t base = r << k;
    for (std::size_t lin : ki.thick_at(k)) {
      const double v = values[k][lin];
      if (v <= 0.0) continue;
      const Index m = unlinear(n, k, lin);
      Index lo{}, hi{};
      for (int i = 0; i < n; ++i) {
        lo[i] = m[i] - r + base;
        hi[i] = m[i] + r + 1 + base;
      }
      for_each_index(n, lo, hi, [&](const Index& w) {
        double& slot = painted[window_linear(k, w)];
        slot = std::max(slot, v);
      });
    }
    if (k > 0) {
      const auto side = static_cast<std::size_t>(c) << k;
      for (std::size_t lin = 0; lin < painted.size(); ++lin) {
        Index w{};
        std::size_t rest = lin;
        for (int i = n - 1; i >= 0; --i) {
          w[i] = static_cast<std::int64_t>(rest % side) >> 1;
          rest /= side;
        }
        painted[lin] = std::max(painted[lin], running[window_linear(k - 1, w)]);
      }
    }
    running = std::move(painted);
  }

  out.field = GridField(n, K, c);
  const int shift = K - seq.kmax();
  for (std::size_t lin = 0; lin < out.field.size(); ++lin) {
    Index w = out.field.cell(lin);
    for (int i = 0; i < n; ++i) w[i] >>= shift;
    out.field[lin] = running[window_linear(seq.kmax(), w)];
  }
  return out;
}

double lp_norm_m0(const std::vector<double>& f, const FrostmanSequence& seq, double p) {
  const auto& w = seq.weights(0);
  long double total = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) total += std::pow(std::abs(f[i]), p) * w[i];
  return std::pow(static_cast<double>(total), 1.0 / p);
}

double lp_norm(const GridField& g, double p) {
  long double total = 0.0L;
  for (double v : g.values()) total += std::pow(std::abs(v), p);
  return std::pow(static_cast<double>(total) * g.cell_volume(), 1.0 / p);
}

TraceReport trace_functional(const std::vector<double>& f, const FrostmanSequence& seq,
                             const SharpField& sharp, double p) {
  if (!(p > 1.0)) throw Error("p must exceed 1");
  TraceReport r;
  r.lp_m0 = lp_norm_m0(f, seq, p);
  r.sharp_lp = lp_norm(sharp.field, p);
  r.total = r.lp_m0 + r.sharp_lp;
  return r;
}

TraceReport trace_functional(const std::vector<double>& f, const KeystoneIndex& ki,
                             const FrostmanSequence& seq, double p, int c, std::size_t budget) {
  if (!(p > 1.0)) throw Error("p must exceed 1");
  return trace_functional(f, seq, sharp_field(f, ki, seq, c, budget), p);
}

double sobolev_norm(const GridField& F, double p) {
  if (!(p >= 1.0)) throw Error("p must be at least 1");
  double total = lp_norm(F, p);
  const auto grad = F.gradient();
  for (const auto& g : grad) {
    long double s = 0.0L;
    for (double v : g) s += std::pow(std::abs(v), p);
    total += std::pow(static_cast<double>(s) * F.cell_volume(), 1.0 / p);
  }
  return total;
}

namespace {

// Averages a block of b^n values (b a power of two) by halving each axis.
double block_mean(std::vector<double> buf, int dim, std::int64_t b) {
  std::int64_t len = b;
  for (int axis = 0; axis < dim; ++axis) {
    // Current shape: axes < axis have length 1 after reduction, others b.
    while (len > 1) {
      const std::size_t half = static_cast<std::size_t>(len / 2);
      std::size_t inner = 1;
      for (int i = axis + 1; i < dim; ++i) inner *= static_cast<std::size_t>(b);
      const std::size_t outer = buf.size() / (static_cast<std::size_t>(len) * inner);
      std::vector<double> next(outer * half * inner);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t t = 0; t < half; ++t)
          for (std::size_t u = 0; u < inner; ++u) {
            const std::size_t src = (o * static_cast<std::size_t>(len) + 2 * t) * inner + u;
            next[(o * half + t) * inner + u] = 0.5 * (buf[src] + buf[src + inner]);
          }
      buf.swap(next);
      len /= 2;
    }
    len = b;
  }
  return buf[0];
}

// Inclusive-exclusive box sums over a field-shaped array.
class BoxSums {
 public:
  BoxSums(int dim, std::int64_t side, const std::vector<double>& data) : dim_(dim), side_(side) {
    const std::size_t stride = static_cast<std::size_t>(side) + 1;
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) total *= stride;
    sums_.assign(total, 0.0);
    Index lo{}, hi{};
    for (int i = 0; i < dim; ++i) hi[i] = side;
    std::size_t lin = 0;
    for_each_index(dim, lo, hi, [&](const Index& m) {
      Index p{};
      for (int i = 0; i < dim; ++i) p[i] = m[i] + 1;
      sums_[at(p)] = data[lin++];
    });
    for (int axis = 0; axis < dim; ++axis) {
      Index plo{}, phi{};
      for (int i = 0; i < dim; ++i) phi[i] = side + 1;
      plo[axis] = 1;
      for_each_index(dim, plo, phi, [&](const Index& p) {
        Index q = p;
        q[axis] -= 1;
        sums_[at(p)] += sums_[at(q)];
      });
    }
  }

  double sum(Index lo, Index hi) const {
    for (int i = 0; i < dim_; ++i) {
      lo[i] = std::clamp<std::int64_t>(lo[i], 0, side_);
      hi[i] = std::clamp<std::int64_t>(hi[i], 0, side_);
      if (lo[i] >= hi[i]) return 0.0;
    }
    double total = 0.0;
    for (unsigned corner = 0; corner < (1u << dim_); ++corner) {
      Index p{};
      double sign = 1.0;
      for (int i = 0; i < dim_; ++i) {
        if ((corner >> i) & 1u) {
          p[i] = lo[i];
          sign = -sign;
        } else {
          p[i] = hi[i];
        }
      }
      total += sign * sums_[at(p)];
    }
    return total;
  }

 private:
  std::size_t at(const Index& p) const {
    std::size_t r = 0;
    for (int i = 0; i < dim_; ++i) r = r * static_cast<std::size_t>(side_ + 1) + static_cast<std::size_t>(p[i]);
    return r;
  }
  int dim_;
  std::int64_t side_;
  std::vector<double> sums_;
};

}  // namespace

std::vector<double> trace(const GridField& F, const DyadicSet& s) {
  const int n = s.dim(), K = s.resolution();
  if (F.dim() != n) throw Error("field and set dimensions differ");
  if (F.resolution() < K) throw Error("field resolution must be at least the leaf level");
  if (F.window() < 1) throw Error("window does not contain Q_{0,0}");
  const std::int64_t b = std::int64_t{1} << (F.resolution() - K);
  const std::int64_t offset = -F.lattice_offset();
  std::vector<double> out(s.leaf_count(), 0.0);
  std::vector<double> buf;
  for (std::size_t leaf : s.marked_linear()) {
    const Index m = unlinear(n, K, leaf);
    Index lo{}, hi{};
    for (int i = 0; i < n; ++i) {
      lo[i] = m[i] * b + offset;
      hi[i] = lo[i] + b;
    }
    buf.clear();
    for_each_index(n, lo, hi, [&](const Index& cell) { buf.push_back(F[F.linear(cell)]); });
    out[leaf] = block_mean(buf, n, b);
  }
  return out;
}

GridField hl_max(const GridField& F, double sigma, double s, double R) {
  if (!(sigma >= 1.0) || !(s >= 0.0) || s > F.dim() || !(R > 0.0)) throw Error("invalid maximal-function parameters");
  const int n = F.dim();
  std::vector<double> powered(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) powered[i] = std::pow(std::abs(F[i]), sigma);
  const BoxSums sums(n, F.cells_per_axis(), powered);
  GridField out(n, F.resolution(), F.window());
  const double h = F.cell_size();
  std::vector<std::int64_t> radii;
  for (std::int64_t t = 0; static_cast<double>(2 * t + 1) * h < R && t <= F.cells_per_axis(); t = 2 * t + 1)
    radii.push_back(t);
  for (std::size_t lin = 0; lin < F.size(); ++lin) {
    const Index c = F.cell(lin);
    double best = 0.0;
    for (std::int64_t t : radii) {
      Index lo{}, hi{};
      for (int i = 0; i < n; ++i) {
        lo[i] = c[i] - t;
        hi[i] = c[i] + t + 1;
      }
      const double cells = std::pow(static_cast<double>(2 * t + 1), n);
      const double l = static_cast<double>(2 * t + 1) * h;
      const double mean = sums.sum(lo, hi) / cells;
      best = std::max(best, std::pow(std::pow(l, s) * mean, 1.0 / sigma));
    }
    out[lin] = best;
  }
  return out;
}

RatioResult poincare_ratio(const GridField& F, const DyadicCube& q, const KeystoneIndex& ki,
                           const FrostmanSequence& seq, const DyadicSet& s, double sigma) {
  const int n = s.dim(), K = s.resolution();
  if (!(sigma > std::max(1.0, n - ki.d())) || sigma > n) throw Error("sigma out of range");
  if (!ki.is_thick(q)) throw Error("cube is not in the thick family");
  if (q.level > seq.kmax()) throw Error("cube level exceeds kmax");
  if (F.resolution() < K) throw Error("field resolution must be at least the leaf level");
  const auto tr = trace(F, s);
  const auto grad = F.gradient();
  const std::int64_t offset = -F.lattice_offset();
  const int shift = F.resolution() - q.level;
  Index lo{}, hi{};
  for (int i = 0; i < n; ++i) {
    lo[i] = (q.index[i] << shift) + offset;
    hi[i] = ((q.index[i] + 1) << shift) + offset;
  }
  double mean = 0.0, grad_mean = 0.0;
  std::size_t count = 0;
  for_each_index(n, lo, hi, [&](const Index& cell) {
    const std::size_t lin = F.linear(cell);
    mean += F[lin];
    double g = 0.0;
    for (int i = 0; i < n; ++i) g += std::pow(std::abs(grad[i][lin]), sigma);
    grad_mean += g;
    ++count;
  });
  mean /= static_cast<double>(count);
  grad_mean /= static_cast<double>(count);
  const double lhs = seq.average(q.level, q, [&] {
    std::vector<double> dev(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) dev[i] = std::abs(tr[i] - mean);
    return dev;
  }());
  const double rhs = q.side() * std::pow(grad_mean, 1.0 / sigma);
  RatioResult r;
  if (rhs <= 0.0) {
    if (lhs <= 1e-15) {
      r.zero_over_zero = true;
    } else {
      r.infinite = true;
      r.value = std::numeric_limits<double>::infinity();
    }
    return r;
  }
  r.value = lhs / rhs;
  return r;
}

double regularity_defect(const std::vector<double>& f, const KeystoneIndex& ki,
                         const FrostmanSequence& seq, const Index& leaf, int c, int depth) {
  const int n = ki.dim(), K = ki.resolution();
  const DyadicCube x_leaf{n, K, leaf};
  if (!in_unit_cube(x_leaf)) throw Error("leaf index out of range");
  const std::size_t lx = linear_index(x_leaf);
  if (seq.weights(0)[lx] <= 0.0) throw Error("leaf is not marked");
  const double fx = f[lx];
  std::vector<double> dev(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) dev[i] = std::abs(fx - f[i]);
  double best = 0.0;
  for (const auto& q : tower(ki, x_leaf.center(), c)) {
    if (q.level < depth || q.level > seq.kmax()) continue;
    best = std::max(best, seq.average(q.level, q, dev));
  }
  return best;
}

}  // namespace stlab
