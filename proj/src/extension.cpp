#include "stlab/extension.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace stlab {

namespace {

constexpr double kBumpRadius = 0.1;
constexpr double kTableHalfWidth = 0.125;
constexpr int kTableBits = 14;
constexpr int kQuadraturePoints = 64;

double raw_bump(double s) {
  const double u = s / kBumpRadius;
  if (std::abs(u) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - u * u));
}

struct GaussLegendre {
  std::array<double, kQuadraturePoints> nodes{};
  std::array<double, kQuadraturePoints> weights{};

  GaussLegendre() {
    constexpr int n = kQuadraturePoints;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
          const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

class BumpTable {
 public:
  BumpTable() {
    const GaussLegendre gl;
    const double h = std::ldexp(1.0, -kTableBits);
    const auto cells = static_cast<std::size_t>(std::ldexp(2.0 * kTableHalfWidth, kTableBits));
    cdf_.assign(cells + 1, 0.0);
    for (std::size_t c = 0; c < cells; ++c) {
      const double a = -kTableHalfWidth + static_cast<double>(c) * h;
      double integral = 0.0;
      for (int q = 0; q < kQuadraturePoints; ++q)
        integral += gl.weights[q] * raw_bump(a + 0.5 * h * (gl.nodes[q] + 1.0));
      cdf_[c + 1] = cdf_[c] + 0.5 * h * integral;
    }
    const double total = cdf_.back();
    for (auto& v : cdf_) v /= total;
    cdf_.back() = 1.0;
    for (std::size_t c = 0; c < cells; ++c) max_slope_ = std::max(max_slope_, (cdf_[c + 1] - cdf_[c]) / h);
  }

  double cdf(double t) const {
    if (t <= -kTableHalfWidth) return 0.0;
    if (t >= kTableHalfWidth) return 1.0;
    const double u = std::ldexp(t + kTableHalfWidth, kTableBits);
    const auto i = std::min(static_cast<std::size_t>(u), cdf_.size() - 2);
    const double frac = u - static_cast<double>(i);
    return cdf_[i] + frac * (cdf_[i + 1] - cdf_[i]);
  }

  double max_slope() const { return max_slope_; }

 private:
  std::vector<double> cdf_;
  double max_slope_ = 0.0;
};

const BumpTable& table() {
  static const BumpTable t;
  return t;
}

// Nonzero psi0(t - m) terms for one coordinate: at most two.
struct AxisTerms {
  int count = 0;
  std::array<std::int64_t, 3> m{};
  std::array<double, 3> v{};
};

AxisTerms axis_terms(double t) {
  AxisTerms a;
  const auto base = static_cast<std::int64_t>(std::floor(t));
  for (std::int64_t m = base - 1; m <= base + 1; ++m) {
    const double v = psi0(t - static_cast<double>(m));
    if (v != 0.0) {
      a.m[a.count] = m;
      a.v[a.count] = v;
      ++a.count;
    }
  }
  return a;
}

template <class Fn>
void for_each_term(int dim, const std::array<AxisTerms, kMaxDim>& axes, Fn&& fn) {
  std::array<int, kMaxDim> pick{};
  for (int i = 0; i < dim; ++i)
    if (axes[i].count == 0) return;
  while (true) {
    Index m{};
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      m[i] = axes[i].m[pick[i]];
      w *= axes[i].v[pick[i]];
    }
    fn(m, w);
    int i = dim - 1;
    while (i >= 0) {
      if (++pick[i] < axes[i].count) break;
      pick[i] = 0;
      --i;
    }
    if (i < 0) return;
  }
}

std::array<AxisTerms, kMaxDim> terms_at(int dim, int k, const Point& y) {
  std::array<AxisTerms, kMaxDim> axes{};
  for (int i = 0; i < dim; ++i) axes[i] = axis_terms(std::ldexp(y[i], k));
  return axes;
}

std::vector<double> coarsen_sum(int dim, int level, const std::vector<double>& fine) {
  std::vector<double> out(level_size(dim, level - 1), 0.0);
  for (std::size_t lin = 0; lin < fine.size(); ++lin) {
    Index m = unlinear(dim, level, lin);
    for (int i = 0; i < dim; ++i) m[i] >>= 1;
    out[linear_index(dim, level - 1, m)] += fine[lin];
  }
  return out;
}

}  // namespace

double bump_cdf(double t) { return table().cdf(t); }

double psi0(double t) {
  if (t <= -kBumpRadius || t >= 1.0 + kBumpRadius) return 0.0;
  if (t <= kTableHalfWidth) return table().cdf(t);
  if (t >= 1.0 - kTableHalfWidth) return 1.0 - table().cdf(t - 1.0);
  return 1.0;
}

double psi0_max_slope() { return table().max_slope(); }

double psi(int dim, int k, const Index& m, const Point& y) {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) v *= psi0(std::ldexp(y[i], k) - static_cast<double>(m[i]));
  return v;
}

ApproxContext::ApproxContext(const DyadicSet& s, const KeystoneIndex& ki, const FrostmanSequence& seq,
                             std::vector<double> f)
    : set_(&s), ki_(&ki), seq_(&seq), f_(std::move(f)) {
  const int n = s.dim();
  if (f_.size() != s.leaf_count()) throw Error("function must have one value per leaf");
  if (ki.dim() != n || seq.dim() != n || ki.resolution() != s.resolution() ||
      seq.resolution() != s.resolution())
    throw Error("set, thick family and measures disagree on n or K");
  if (seq.kmax() > ki.resolution()) throw Error("kmax exceeds the leaf level");
  levels_.resize(static_cast<std::size_t>(seq.kmax()) + 1);
  for (int k = 0; k <= seq.kmax(); ++k) {
    std::vector<double> mass = seq.weights(k);
    std::vector<double> moment(mass.size());
    for (std::size_t i = 0; i < mass.size(); ++i) moment[i] = mass[i] * f_[i];
    for (int j = s.resolution(); j > k; --j) {
      mass = coarsen_sum(n, j, mass);
      moment = coarsen_sum(n, j, moment);
    }
    Level& lv = levels_[k];
    lv.cube_avg.assign(mass.size(), 0.0);
    for (std::size_t lin : ki.thick_at(k))
      lv.cube_avg[lin] = mass[lin] > 0.0 ? moment[lin] / mass[lin] : 0.0;

    const std::int64_t side = std::int64_t{1} << k;
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(side + 2);
    lv.tilde.assign(total, 0);
    lv.local.assign(total, 0.0);
    lv.count.assign(total, 0);
    Index lo{}, hi{};
    for (int i = 0; i < n; ++i) {
      lo[i] = -1;
      hi[i] = side + 1;
    }
    for_each_index(n, lo, hi, [&](const Index& m) {
      bool inside = false;
      const std::size_t p = padded(k, m, inside);
      Index a{}, b{};
      for (int i = 0; i < n; ++i) {
        a[i] = std::max<std::int64_t>(m[i] - 1, 0);
        b[i] = std::min<std::int64_t>(m[i] + 2, side);
      }
      int count = 0;
      double sum = 0.0;
      for_each_index(n, a, b, [&](const Index& q) {
        const std::size_t lin = linear_index(n, k, q);
        if (ki.is_thick(k, lin)) {
          ++count;
          sum += lv.cube_avg[lin];
        }
      });
      lv.count[p] = count;
      lv.tilde[p] = count > 0;
      lv.local[p] = count > 0 ? sum / count : 0.0;
    });
  }
}

std::size_t ApproxContext::padded(int k, const Index& m, bool& inside) const {
  const std::int64_t side = (std::int64_t{1} << k) + 2;
  std::size_t r = 0;
  inside = true;
  for (int i = 0; i < dim(); ++i) {
    const std::int64_t t = m[i] + 1;
    if (t < 0 || t >= side) {
      inside = false;
      return 0;
    }
    r = r * static_cast<std::size_t>(side) + static_cast<std::size_t>(t);
  }
  return r;
}

double ApproxContext::cube_average(int k, const Index& m) const {
  const DyadicCube q{dim(), k, m};
  if (!in_unit_cube(q)) return 0.0;
  return levels_[k].cube_avg[linear_index(q)];
}

int ApproxContext::neighbor_count(int k, const Index& m) const {
  bool inside = false;
  const std::size_t p = padded(k, m, inside);
  return inside ? levels_[k].count[p] : 0;
}

double ApproxContext::local_average(int k, const Index& m) const {
  bool inside = false;
  const std::size_t p = padded(k, m, inside);
  return inside ? levels_[k].local[p] : 0.0;
}

bool ApproxContext::in_tilde(int k, const Index& m) const {
  if (k > kmax()) return ki_->in_tilde(DyadicCube{dim(), k, m});
  bool inside = false;
  const std::size_t p = padded(k, m, inside);
  return inside && levels_[k].tilde[p] != 0;
}

std::vector<double> ApproxContext::fk_all(const Point& y, int k) const {
  if (k < 0 || k > kmax()) throw Error("level outside the approximating sequence");
  const int n = dim();
  std::vector<double> out(static_cast<std::size_t>(k) + 1);
  double base = 0.0;
  for_each_term(n, terms_at(n, 0, y), [&](const Index& m, double w) {
    bool unit = true;
    for (int i = 0; i < n; ++i) unit = unit && m[i] >= -1 && m[i] <= 1;
    if (unit) base += w;
  });
  double cur = local_average(0, Index{}) * base;
  out[0] = cur;
  for (int j = 1; j <= k; ++j) {
    double update = 0.0;
    for_each_term(n, terms_at(n, j, y), [&](const Index& m, double w) {
      bool inside = false;
      const std::size_t p = padded(j, m, inside);
      if (inside && levels_[j].tilde[p]) update += w * (levels_[j].local[p] - cur);
    });
    cur += update;
    out[j] = cur;
  }
  return out;
}

void ApproxContext::psi_split(int k, const Point& y, double& inside_sum, double& outside_sum) const {
  inside_sum = 0.0;
  outside_sum = 0.0;
  for_each_term(dim(), terms_at(dim(), k, y), [&](const Index& m, double w) {
    if (in_tilde(k, m))
      inside_sum += w;
    else
      outside_sum += w;
  });
}

double ApproxContext::fk_explicit(int k, const Point& y, int i) const {
  if (i < 0 || i > k || k > kmax()) throw Error("levels outside the approximating sequence");
  const int n = dim();
  const double fi = fk(i, y);
  std::vector<double> outside(static_cast<std::size_t>(k) + 1, 0.0);
  for (int r = i + 1; r <= k; ++r) {
    double in = 0.0;
    psi_split(r, y, in, outside[r]);
  }
  double total = fi;
  for (int j = i + 1; j <= k; ++j) {
    double tail = 1.0;
    for (int r = j + 1; r <= k; ++r) tail *= outside[r];
    double s = 0.0;
    for_each_term(n, terms_at(n, j, y), [&](const Index& m, double w) {
      if (in_tilde(j, m)) s += w * (local_average(j, m) - fi);
    });
    total += s * tail;
  }
  return total;
}

std::vector<std::vector<double>> ApproxContext::deviation_table(double c) const {
  const int n = dim();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(kmax()) + 1);
  for (int k = 0; k <= kmax(); ++k) {
    std::vector<double> mass = seq_->weights(k);
    std::vector<double> moment(mass.size());
    for (std::size_t i = 0; i < mass.size(); ++i) moment[i] = mass[i] * std::abs(f_[i] - c);
    for (int j = set_->resolution(); j > k; --j) {
      mass = coarsen_sum(n, j, mass);
      moment = coarsen_sum(n, j, moment);
    }
    out[k].assign(mass.size(), 0.0);
    for (std::size_t lin = 0; lin < mass.size(); ++lin)
      out[k][lin] = mass[lin] > 0.0 ? moment[lin] / mass[lin] : 0.0;
  }
  return out;
}

SupportingIndices supporting(const ApproxContext& ctx, const Point& y) {
  SupportingIndices out;
  const int n = ctx.dim();
  for (int k = 0; k <= ctx.kmax(); ++k) {
    const std::int64_t side = std::int64_t{1} << k;
    Index lo{}, hi{};
    bool empty = false;
    for (int i = 0; i < n; ++i) {
      const double t = std::ldexp(y[i], k);
      // |t - m - 1/2| <= 7/5
      lo[i] = std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(t - 1.9)), 0);
      hi[i] = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(t + 0.9)) + 1, side);
      if (lo[i] >= hi[i]) empty = true;
    }
    bool hit = false;
    if (!empty) {
      for_each_index(n, lo, hi, [&](const Index& m) {
        if (hit || !ctx.keystone().is_thick(k, linear_index(n, k, m))) return;
        bool in = true;
        for (int i = 0; i < n; ++i)
          in = in && std::abs(std::ldexp(y[i], k) - static_cast<double>(m[i]) - 0.5) <= 1.4;
        hit = in;
      });
    }
    if (hit) out.lower.push_back(k);
    double in = 0.0, outside = 0.0;
    ctx.psi_split(k, y, in, outside);
    if (in > 0.0) out.upper.push_back(k);
  }
  out.lower_truncated = !out.lower.empty() && out.lower.back() == ctx.kmax();
  out.upper_truncated = !out.upper.empty() && out.upper.back() == ctx.kmax();
  return out;
}

namespace {

GridField sample_grid(const ApproxContext& ctx, int k, int Kf, int window) {
  const int n = ctx.dim();
  GridField g(n, Kf, window);
  const std::int64_t cells = g.cells_per_axis();
  const double h = g.cell_size();
  // Per level and per axis coordinate: the nonzero psi0 terms.
  std::vector<std::vector<AxisTerms>> axis(static_cast<std::size_t>(k) + 1,
                                           std::vector<AxisTerms>(static_cast<std::size_t>(cells)));
  for (int j = 0; j <= k; ++j)
    for (std::int64_t c = 0; c < cells; ++c)
      axis[j][c] = axis_terms(std::ldexp(g.origin() + (static_cast<double>(c) + 0.5) * h, j));

  const double f00 = ctx.local_average(0, Index{});
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const Index cell = g.cell(lin);
    std::array<AxisTerms, kMaxDim> terms{};
    for (int i = 0; i < n; ++i) terms[i] = axis[0][cell[i]];
    double base = 0.0;
    for_each_term(n, terms, [&](const Index& m, double w) {
      bool unit = true;
      for (int i = 0; i < n; ++i) unit = unit && m[i] >= -1 && m[i] <= 1;
      if (unit) base += w;
    });
    double cur = f00 * base;
    for (int j = 1; j <= k; ++j) {
      for (int i = 0; i < n; ++i) terms[i] = axis[j][cell[i]];
      double update = 0.0;
      for_each_term(n, terms, [&](const Index& m, double w) {
        if (ctx.in_tilde(j, m)) update += w * (ctx.local_average(j, m) - cur);
      });
      cur += update;
    }
    g[lin] = cur;
  }
  return g;
}

}  // namespace

GridField sample_fk(const ApproxContext& ctx, int k, int Kf, int window) {
  if (k < 0 || k > ctx.kmax()) throw Error("level outside the approximating sequence");
  return sample_grid(ctx, k, Kf, window);
}

GridField extend(const ApproxContext& ctx, int Kf, int window) {
  const int K = ctx.set().resolution();
  if (Kf < 0) Kf = K + 1;
  if (Kf < K) throw Error("field resolution must be at least the leaf level");
  GridField g = sample_grid(ctx, ctx.kmax(), Kf, window);
  const int n = ctx.dim();
  const std::int64_t side = std::int64_t{1} << K;
  const std::int64_t offset = g.lattice_offset();
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const Index cell = g.cell(lin);
    Index leaf{};
    bool inside = true;
    for (int i = 0; i < n; ++i) {
      const std::int64_t lattice = cell[i] + offset;
      leaf[i] = lattice >> (Kf - K);
      inside = inside && leaf[i] >= 0 && leaf[i] < side;
    }
    if (!inside) continue;
    const std::size_t l = linear_index(n, K, leaf);
    if (ctx.set().is_marked(l)) g[lin] = ctx.values()[l];
  }
  return g;
}

double gradient_majorant(const ApproxContext& ctx, const std::vector<std::vector<double>>& deviation,
                         int k, int kstar, const Point& y) {
  const int n = ctx.dim();
  if (k < kstar || k > ctx.kmax()) throw Error("levels outside the approximating sequence");
  const auto sup = supporting(ctx, y);
  if (!std::binary_search(sup.lower.begin(), sup.lower.end(), kstar))
    throw Error("kstar is not a lower supporting level of y");
  double best = 0.0;
  for (int j = kstar; j <= k; ++j) {
    const std::int64_t side = std::int64_t{1} << j;
    Index lo{}, hi{};
    bool empty = false;
    for (int i = 0; i < n; ++i) {
      const double t = std::ldexp(y[i], j);
      // |t - m - 1/2| <= 8/5
      lo[i] = std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(t - 2.1)), 0);
      hi[i] = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(t + 1.1)) + 1, side);
      if (lo[i] >= hi[i]) empty = true;
    }
    if (empty) continue;
    for_each_index(n, lo, hi, [&](const Index& m) {
      const std::size_t lin = linear_index(n, j, m);
      if (!ctx.keystone().is_thick(j, lin)) return;
      for (int i = 0; i < n; ++i)
        if (std::abs(std::ldexp(y[i], j) - static_cast<double>(m[i]) - 0.5) > 1.6) return;
      best = std::max(best, deviation[j][lin]);
    });
  }
  return std::ldexp(best, k);
}

double gradient_majorant(const ApproxContext& ctx, int k, int kstar, double c, const Point& y) {
  return gradient_majorant(ctx, ctx.deviation_table(c), k, kstar, y);
}

double partition_identity_residual(const ApproxContext& ctx, const std::vector<int>& levels,
                                   const Point& y) {
  if (levels.empty()) throw Error("need at least one level");
  const std::size_t s = levels.size();
  std::vector<double> a(s), b(s);
  for (std::size_t j = 0; j < s; ++j) {
    if (j > 0 && levels[j] <= levels[j - 1]) throw Error("levels must increase");
    ctx.psi_split(levels[j], y, a[j], b[j]);
  }
  double lhs = 1.0;
  for (std::size_t j = 0; j + 1 < s; ++j) {
    double tail = a[j];
    for (std::size_t r = j + 1; r < s; ++r) tail *= b[r];
    lhs -= tail;
  }
  lhs -= a[s - 1];
  double rhs = 1.0;
  for (std::size_t j = 0; j < s; ++j) rhs *= b[j];
  return lhs - rhs;
}

}  // namespace stlab
