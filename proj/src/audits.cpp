#include "stlab/audits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace stlab {

CarlesonAudit carleson_audit(const KeystoneIndex& ki, int c, const std::vector<double>& exponents) {
  const int n = ki.dim();
  const double lambda = ki.lambda();
  CarlesonAudit a;
  const auto shadows = shadow_map(ki, c);

  for (int k = 0; k < ki.resolution(); ++k)
    for (std::size_t lin : ki.thick_at(k))
      if (!shadows.count(cube_key(k, lin))) ++a.empty_shadows;

  std::vector<CubeKey> apexes;
  apexes.reserve(shadows.size());
  for (const auto& [key, v] : shadows) apexes.push_back(key);
  std::sort(apexes.begin(), apexes.end());

  const std::size_t e = exponents.size();
  for (CubeKey key : apexes) {
    const DyadicCube qbar = cube_from_key(n, key);
    const auto& sh = shadows.at(key);
    ++a.apexes;

    std::unordered_set<CubeKey> shadow_keys;
    for (const auto& q : sh) shadow_keys.insert(cube_key(q));

    const Iceberg ice = iceberg(qbar, sh);
    a.max_depth = std::max(a.max_depth, ice.depth);
    for (const auto& q : ice.cubes)
      if (q.level > qbar.level && ki.is_thick(q)) ++a.thick_iceberg_cubes;

    // Shadow sums inside each iceberg cube.
    std::unordered_map<CubeKey, std::vector<double>> sums;
    std::vector<double> global(e, 0.0);
    for (const auto& q : sh) {
      for (int j = q.level - 1; j >= qbar.level; --j) {
        const DyadicCube anc = ancestor(q, j);
        if (!in_unit_cube(anc)) continue;
        if (shadow_keys.count(cube_key(anc))) ++a.overlapping_shadows;
        auto& s = sums[cube_key(anc)];
        s.resize(e, 0.0);
        for (std::size_t t = 0; t < e; ++t) s[t] += std::pow(q.side(), exponents[t]);
      }
      for (std::size_t t = 0; t < e; ++t) global[t] += std::pow(q.side(), exponents[t]);
    }
    for (const auto& q : ice.cubes) {
      const auto it = sums.find(cube_key(q));
      if (it == sums.end()) continue;
      for (std::size_t t = 0; t < e; ++t) {
        const double dt = exponents[t];
        const double bound = std::exp2(n - dt) / lambda * std::pow(q.side(), dt);
        const double ratio = it->second[t] / bound;
        a.max_local_ratio = std::max(a.max_local_ratio, ratio);
        ++a.local_checks;
        if (ratio > 1.0 + 1e-12) ++a.violations;
      }
    }
    for (std::size_t t = 0; t < e; ++t) {
      const double dt = exponents[t];
      const double bound = static_cast<double>(multiplicity_bound(n, c)) * std::exp2(n - dt) / lambda *
                           std::pow(qbar.side(), dt);
      const double ratio = global[t] / bound;
      a.max_global_ratio = std::max(a.max_global_ratio, ratio);
      if (ratio > 1.0 + 1e-12) ++a.violations;
    }

    // Same-level cubes near the apex: in the iceberg iff they contain a shadow cube.
    const auto& top = ice.layers.empty() ? std::vector<DyadicCube>{} : ice.layers[0];
    for (const auto& q2 : gamma(qbar, c)) {
      if (!in_unit_cube(q2)) continue;
      const bool in_ice = std::binary_search(top.begin(), top.end(), q2);
      const bool holds = std::any_of(sh.begin(), sh.end(), [&](const DyadicCube& s) { return is_subcube(s, q2); });
      if (in_ice != holds) ++a.apex_layer_mismatches;
    }
  }
  return a;
}

namespace {

double family_sum(const std::vector<DyadicCube>& fam, double d) {
  double s = 0.0;
  for (const auto& q : fam) s += std::pow(q.side(), d);
  return s;
}

// Replaces the members below `top` by `top`.
std::vector<DyadicCube> absorb(const std::vector<DyadicCube>& fam, const DyadicCube& top) {
  std::vector<DyadicCube> out{top};
  for (const auto& q : fam)
    if (!is_subcube(q, top)) out.push_back(q);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

FamilyPackingAudit family_packing_audit(const KeystoneIndex& generations, const Decomposition& dec,
                                        const KeystoneIndex& family, std::uint64_t seed,
                                        int random_coarsenings) {
  const int n = generations.dim(), K = generations.resolution();
  const double d = generations.d();
  const double lambda2 = family.lambda();
  FamilyPackingAudit a;
  std::unordered_map<CubeKey, int> gen_of;
  for (std::size_t g = 0; g < dec.generations.size(); ++g)
    for (const auto& q : dec.generations[g]) gen_of[cube_key(q)] = static_cast<int>(g);
  std::mt19937_64 rng(seed);

  for (int k = 0; k <= K; ++k) {
    const auto& hv = generations.content().level_values(k);
    for (std::size_t lin = 0; lin < hv.size(); ++lin) {
      if (hv[lin] <= 0.0) continue;
      const DyadicCube q = cube_at(n, k, lin);
      // Deepest generation cube containing q.
      int g = -1;
      for (int j = k; j >= 0 && g < 0; --j) {
        const auto it = gen_of.find(cube_key(ancestor(q, j)));
        if (it != gen_of.end()) g = it->second;
      }
      if (g < 0) continue;
      // Members of the next generation inside q.
      std::vector<DyadicCube> start;
      std::vector<DyadicCube> stack;
      if (k < K) stack = children(q);
      while (!stack.empty()) {
        const DyadicCube t = stack.back();
        stack.pop_back();
        const auto it = gen_of.find(cube_key(t));
        if (it != gen_of.end() && it->second == g + 1) {
          start.push_back(t);
        } else if (t.level < K && generations.content().value(t) > 0.0) {
          auto ch = children(t);
          stack.insert(stack.end(), ch.begin(), ch.end());
        }
      }
      if (start.empty()) continue;
      std::sort(start.begin(), start.end());
      ++a.cubes;

      const bool saturated = is_thick_value(hv[lin], generations.content().cap(k), 1.0);
      const double bound = (saturated ? std::exp2(n - d) : 1.0) * std::pow(q.side(), d) / lambda2;
      auto check = [&](const std::vector<DyadicCube>& fam) {
        for (const auto& t : fam)
          if (!family.is_thick(t)) return;
        ++a.families;
        const double ratio = family_sum(fam, d) / bound;
        a.max_ratio = std::max(a.max_ratio, ratio);
        if (ratio > 1.0 + 1e-12) ++a.violations;
      };

      check(start);
      int deepest = k;
      for (const auto& t : start) deepest = std::max(deepest, t.level);
      for (int t = k; t < deepest; ++t) {
        std::vector<DyadicCube> fam = start;
        std::vector<DyadicCube> tops;
        for (const auto& s : start)
          if (s.level > t) tops.push_back(ancestor(s, t));
        std::sort(tops.begin(), tops.end());
        tops.erase(std::unique(tops.begin(), tops.end()), tops.end());
        for (const auto& top : tops)
          if (family.is_thick(top)) fam = absorb(fam, top);
        check(fam);
      }
      for (int r = 0; r < random_coarsenings; ++r) {
        std::vector<DyadicCube> fam = start;
        for (int step = 0; step < 3; ++step) {
          const auto& pick = fam[static_cast<std::size_t>(rng() % fam.size())];
          if (pick.level <= k) break;
          const int level = k + static_cast<int>(rng() % static_cast<std::uint64_t>(pick.level - k));
          const DyadicCube top = ancestor(pick, level);
          if (family.is_thick(top)) fam = absorb(fam, top);
        }
        check(fam);
      }
    }
  }
  return a;
}

MultiplicityAudit dilation_multiplicity(int dim, double c, int level) {
  check_dim(dim);
  if (!(c >= 1.0)) throw Error("dilation factor must be at least 1");
  MultiplicityAudit a;
  a.bound = multiplicity_bound(dim, c);
  const double l = std::ldexp(1.0, -level);
  const auto reach = static_cast<std::int64_t>(std::ceil(c)) + 2;
  // Level-(k+3) lattice points of [-2, 3]^n in units of l.
  const std::int64_t steps = 8;
  Index plo{}, phi{};
  for (int i = 0; i < dim; ++i) {
    plo[i] = -2 * steps;
    phi[i] = 3 * steps + 1;
  }
  for_each_index(dim, plo, phi, [&](const Index& p) {
    Point x{};
    for (int i = 0; i < dim; ++i) x[i] = static_cast<double>(p[i]) / steps * l;
    Index lo{}, hi{};
    for (int i = 0; i < dim; ++i) {
      const auto base = static_cast<std::int64_t>(std::floor(x[i] / l));
      lo[i] = base - reach;
      hi[i] = base + reach + 1;
    }
    std::int64_t count = 0;
    for_each_index(dim, lo, hi, [&](const Index& m) {
      bool in = true;
      for (int i = 0; i < dim; ++i) {
        const double center = (static_cast<double>(m[i]) + 0.5) * l;
        in = in && std::abs(x[i] - center) <= 0.5 * c * l;
      }
      count += in;
    });
    a.max_multiplicity = std::max(a.max_multiplicity, count);
    ++a.points;
  });

  // If cQ meets Q' then so does [c]Q, for same-level Q' near Q = Q_{k,0}.
  const double fc = std::floor(c);
  Index lo{}, hi{};
  for (int i = 0; i < dim; ++i) {
    lo[i] = -reach;
    hi[i] = reach + 1;
  }
  for_each_index(dim, lo, hi, [&](const Index& m) {
    bool meets_c = true, meets_floor = true;
    for (int i = 0; i < dim; ++i) {
      const double gap = std::abs(static_cast<double>(m[i]));  // centre distance in units of l
      meets_c = meets_c && gap <= 0.5 * c + 0.5;
      meets_floor = meets_floor && gap <= 0.5 * fc + 0.5;
    }
    if (meets_c && !meets_floor) ++a.subset_failures;
  });
  return a;
}

CavityAudit cavity_audit(const KeystoneIndex& ki, int c, int kappa) {
  const int n = ki.dim(), K = ki.resolution();
  if (c < 1 || c % 2 == 0) throw Error("dilation factor must be a positive odd integer");
  if (kappa < 1 || kappa > K) throw Error("kappa must lie in [1, K]");
  CavityAudit a;
  a.bound = 2 * kappa * multiplicity_bound(n, c);
  const std::int64_t r = (c - 1) / 2;

  auto side_at = [&](int level) { return static_cast<std::int64_t>(c) << level; };
  auto window_linear = [&](int level, const Index& w) {
    std::size_t lin = 0;
    for (int i = 0; i < n; ++i) lin = lin * static_cast<std::size_t>(side_at(level)) + static_cast<std::size_t>(w[i]);
    return lin;
  };
  auto window_size = [&](int level) {
    std::size_t s = 1;
    for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(side_at(level));
    return s;
  };

  // deepest[cell]: largest level j with the cell inside cQ' for a thick Q' of level j.
  std::vector<std::int8_t> deepest;
  for (int j = 0; j <= K; ++j) {
    std::vector<std::int8_t> here(window_size(j), -1);
    const std::int64_t base = r << j;
    for (std::size_t lin : ki.thick_at(j)) {
      const Index m = unlinear(n, j, lin);
      Index lo{}, hi{};
      for (int i = 0; i < n; ++i) {
        lo[i] = std::max<std::int64_t>(m[i] - r + base, 0);
        hi[i] = std::min<std::int64_t>(m[i] + r + 1 + base, side_at(j));
      }
      for_each_index(n, lo, hi, [&](const Index& w) { here[window_linear(j, w)] = static_cast<std::int8_t>(j); });
    }
    if (j > 0) {
      const auto side = static_cast<std::size_t>(side_at(j));
      for (std::size_t lin = 0; lin < here.size(); ++lin) {
        if (here[lin] >= 0) continue;
        Index w{};
        std::size_t rest = lin;
        for (int i = n - 1; i >= 0; --i) {
          w[i] = static_cast<std::int64_t>(rest % side) >> 1;
          rest /= side;
        }
        here[lin] = deepest[window_linear(j - 1, w)];
      }
    }
    deepest = std::move(here);
  }

  std::vector<std::int32_t> overlap(window_size(K), 0);
  const std::int64_t base = r << K;
  a.min_volume_ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k + kappa <= K; ++k) {
    const int shift = K - k;
    for (std::size_t lin = 0; lin < level_size(n, k); ++lin) {
      const bool thick = ki.is_thick(k, lin);
      const Index m = unlinear(n, k, lin);
      Index lo{}, hi{};
      for (int i = 0; i < n; ++i) {
        lo[i] = ((m[i] - r) << shift) + base;
        hi[i] = ((m[i] + r + 1) << shift) + base;
      }
      std::size_t cells = 0;
      for_each_index(n, lo, hi, [&](const Index& w) {
        const std::size_t at = window_linear(K, w);
        if (deepest[at] >= k + kappa) return;
        ++cells;
        if (thick) ++overlap[at];
      });
      if (thick) {
        ++a.cavities;
      } else {
        ++a.thin_cubes;
        const double ratio = std::ldexp(static_cast<double>(cells), -n * shift);
        a.min_volume_ratio = std::min(a.min_volume_ratio, ratio);
      }
    }
  }
  for (auto v : overlap) a.max_overlap = std::max<std::int64_t>(a.max_overlap, v);
  if (a.thin_cubes == 0) a.min_volume_ratio = 0.0;
  return a;
}

}  // namespace stlab
