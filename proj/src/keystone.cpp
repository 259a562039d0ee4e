#include "stlab/keystone.hpp"

#include <algorithm>
#include <cmath>

namespace stlab {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// Index range [lo, hi) of level-j cubes Q' with the level-t cube box
// [a, b] (per axis) inside c Q'.
void container_range(std::int64_t a, std::int64_t b, int t, int j, int c, std::int64_t& lo,
                     std::int64_t& hi) {
  const std::int64_t r = (c - 1) / 2;
  const int level = std::max(t, j);
  const std::int64_t ta = a << (level - t), tb = b << (level - t);
  const std::int64_t s = std::int64_t{1} << (level - j);
  lo = ceil_div(tb, s) - 1 - r;
  hi = floor_div(ta, s) + r + 1;
}

}  // namespace

DyadicCube cube_from_key(int dim, CubeKey key) {
  const int level = static_cast<int>(key >> 58);
  const std::size_t lin = static_cast<std::size_t>(key & ((CubeKey{1} << 58) - 1));
  return cube_at(dim, level, lin);
}

KeystoneIndex::KeystoneIndex(ContentTree h, double lambda) : h_(std::move(h)), lambda_(lambda) {
  const int K = h_.resolution();
  const int n = h_.dim();
  thick_.resize(static_cast<std::size_t>(K) + 1);
  thick_list_.resize(static_cast<std::size_t>(K) + 1);
  ancestor_level_.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    const auto& vals = h_.level_values(k);
    const double cap = h_.cap(k);
    thick_[k].resize(vals.size());
    for (std::size_t lin = 0; lin < vals.size(); ++lin) {
      thick_[k][lin] = is_thick_value(vals[lin], cap, lambda_);
      if (thick_[k][lin]) thick_list_[k].push_back(lin);
    }
    ancestor_level_[k].assign(vals.size(), -1);
    if (k == 0) continue;
    for (std::size_t lin = 0; lin < vals.size(); ++lin) {
      const Index m = unlinear(n, k, lin);
      Index p{};
      for (int i = 0; i < n; ++i) p[i] = m[i] >> 1;
      const std::size_t plin = linear_index(n, k - 1, p);
      ancestor_level_[k][lin] =
          thick_[k - 1][plin] ? static_cast<std::int8_t>(k - 1) : ancestor_level_[k - 1][plin];
    }
  }
}

bool KeystoneIndex::is_thick(const DyadicCube& q) const {
  if (q.level < 0 || q.level > resolution() || !in_unit_cube(q)) return false;
  return thick_[q.level][linear_index(q)] != 0;
}

bool KeystoneIndex::in_tilde(const DyadicCube& q) const {
  if (q.level < 0 || q.level > resolution()) return false;
  const int n = dim();
  const std::int64_t side = std::int64_t{1} << q.level;
  Index lo{}, hi{};
  for (int i = 0; i < n; ++i) {
    lo[i] = std::max<std::int64_t>(q.index[i] - 1, 0);
    hi[i] = std::min<std::int64_t>(q.index[i] + 2, side);
    if (lo[i] >= hi[i]) return false;
  }
  bool found = false;
  for_each_index(n, lo, hi, [&](const Index& m) {
    if (!found && thick_[q.level][linear_index(n, q.level, m)]) found = true;
  });
  return found;
}

std::vector<DyadicCube> KeystoneIndex::df() const {
  std::vector<DyadicCube> out;
  for (int k = 0; k <= resolution(); ++k)
    for (std::size_t lin : thick_list_[k]) out.push_back(cube_at(dim(), k, lin));
  return out;
}

std::size_t KeystoneIndex::df_size() const {
  std::size_t total = 0;
  for (const auto& l : thick_list_) total += l.size();
  return total;
}

int KeystoneIndex::nearest_thick_ancestor_level(const DyadicCube& q) const {
  if (q.level <= 0 || q.level > resolution() || !in_unit_cube(q)) return -1;
  return ancestor_level_[q.level][linear_index(q)];
}

std::optional<DyadicCube> KeystoneIndex::nearest_thick_ancestor(const DyadicCube& q) const {
  const int a = nearest_thick_ancestor_level(q);
  if (a < 0) return std::nullopt;
  return ancestor(q, a);
}

KeystoneIndex keystone(const DyadicSet& s, double d, double lambda) {
  ContentTree h = content_tree(s, d);
  if (!(lambda > 0.0)) throw Error("lambda must be positive");
  if (lambda >= h.root()) throw Error("lambda exceeds content");
  return KeystoneIndex(std::move(h), lambda);
}

std::vector<DyadicCube> maximal_thick_below(const KeystoneIndex& ki, const DyadicCube& q) {
  std::vector<DyadicCube> out;
  std::vector<DyadicCube> stack;
  if (q.level < ki.resolution()) stack = children(q);
  while (!stack.empty()) {
    const DyadicCube c = stack.back();
    stack.pop_back();
    if (ki.content().value(c) <= 0.0) continue;
    if (ki.is_thick(c)) {
      out.push_back(c);
    } else if (c.level < ki.resolution()) {
      auto ch = children(c);
      stack.insert(stack.end(), ch.begin(), ch.end());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Decomposition canonical_decomposition(const KeystoneIndex& ki, const DyadicSet& s) {
  Decomposition dec;
  const int n = ki.dim(), K = ki.resolution();
  std::vector<DyadicCube> gen{root_cube(n)};
  while (!gen.empty()) {
    std::vector<std::uint8_t> uncovered = s.marks();
    for (const auto& q : gen) {
      const int shift = K - q.level;
      Index lo{}, hi{};
      for (int i = 0; i < n; ++i) {
        lo[i] = q.index[i] << shift;
        hi[i] = (q.index[i] + 1) << shift;
      }
      for_each_index(n, lo, hi, [&](const Index& m) { uncovered[linear_index(n, K, m)] = 0; });
    }
    dec.defect.push_back(content_of_marks(n, K, uncovered, ki.d()));
    std::vector<DyadicCube> next;
    for (const auto& q : gen) {
      auto below = maximal_thick_below(ki, q);
      next.insert(next.end(), below.begin(), below.end());
    }
    std::sort(next.begin(), next.end());
    dec.generations.push_back(std::move(gen));
    gen = std::move(next);
  }
  return dec;
}

std::vector<Index> essential_cells(const KeystoneIndex& ki, const Decomposition& dec,
                                   const DyadicSet& s) {
  const int n = ki.dim(), K = ki.resolution();
  std::vector<std::uint8_t> in_all = s.marks();
  std::vector<std::uint8_t> persistent(s.leaf_count(), 0);
  for (const auto& gen : dec.generations) {
    std::vector<std::uint8_t> covered = persistent;
    for (const auto& q : gen) {
      const int shift = K - q.level;
      Index lo{}, hi{};
      for (int i = 0; i < n; ++i) {
        lo[i] = q.index[i] << shift;
        hi[i] = (q.index[i] + 1) << shift;
      }
      for_each_index(n, lo, hi, [&](const Index& m) { covered[linear_index(n, K, m)] = 1; });
      if (q.level == K) persistent[linear_index(q)] = 1;
    }
    for (std::size_t i = 0; i < in_all.size(); ++i) in_all[i] = in_all[i] && covered[i];
  }
  std::vector<Index> out;
  for (std::size_t i = 0; i < in_all.size(); ++i)
    if (in_all[i]) out.push_back(unlinear(n, K, i));
  return out;
}

std::vector<DyadicCube> covering_cubes(const KeystoneIndex& ki, const DyadicCube& q, int c,
                                       bool strong) {
  if (strong && c != 1) throw Error("strong covering requires c = 1");
  if (c < 1 || c % 2 == 0) throw Error("dilation factor must be a positive odd integer");
  const int n = ki.dim();
  const int a = ki.nearest_thick_ancestor_level(q);
  const int from = std::max(a, 0);
  const int to = strong ? std::min(q.level - 1, from) : q.level;
  std::vector<DyadicCube> out;
  for (int j = from; j <= to; ++j) {
    Index lo{}, hi{};
    bool empty = false;
    const std::int64_t side = std::int64_t{1} << j;
    for (int i = 0; i < n; ++i) {
      container_range(q.index[i], q.index[i] + 1, q.level, j, c, lo[i], hi[i]);
      lo[i] = std::max<std::int64_t>(lo[i], 0);
      hi[i] = std::min<std::int64_t>(hi[i], side);
      if (lo[i] >= hi[i]) empty = true;
    }
    if (empty) continue;
    for_each_index(n, lo, hi, [&](const Index& m) {
      if (ki.is_thick(j, linear_index(n, j, m))) out.push_back(DyadicCube{n, j, m});
    });
  }
  if (strong) {
    std::erase_if(out, [&](const DyadicCube& b) { return b.level >= q.level; });
  }
  std::sort(out.begin(), out.end());
  return out;
}

DyadicCube select_covering(const std::vector<DyadicCube>& candidates) {
  if (candidates.empty()) throw Error("no covering cube");
  DyadicCube best = candidates.front();
  for (const auto& c : candidates) {
    if (c.level > best.level || (c.level == best.level && c.index < best.index)) best = c;
  }
  return best;
}

std::vector<DyadicCube> shadow(const KeystoneIndex& ki, const DyadicCube& qbar, int c) {
  if (!ki.is_thick(qbar)) throw Error("cube is not in the thick family");
  const int n = ki.dim();
  const LatticeBox box = dilate(qbar, c);
  std::vector<DyadicCube> out;
  for (int j = qbar.level + 1; j <= ki.resolution(); ++j) {
    const int shift = j - qbar.level;
    const std::int64_t side = std::int64_t{1} << j;
    Index lo{}, hi{};
    bool empty = false;
    for (int i = 0; i < n; ++i) {
      lo[i] = std::max<std::int64_t>(box.lo[i] << shift, 0);
      hi[i] = std::min<std::int64_t>(box.hi[i] << shift, side);
      if (lo[i] >= hi[i]) empty = true;
    }
    if (empty) continue;
    for_each_index(n, lo, hi, [&](const Index& m) {
      const std::size_t lin = linear_index(n, j, m);
      if (!ki.is_thick(j, lin)) return;
      const DyadicCube q{n, j, m};
      if (std::max(ki.nearest_thick_ancestor_level(q), 0) <= qbar.level) out.push_back(q);
    });
  }
  return out;
}

std::unordered_map<CubeKey, std::vector<DyadicCube>> shadow_map(const KeystoneIndex& ki, int c) {
  if (c < 1 || c % 2 == 0) throw Error("dilation factor must be a positive odd integer");
  const int n = ki.dim();
  std::unordered_map<CubeKey, std::vector<DyadicCube>> out;
  for (int k = 1; k <= ki.resolution(); ++k) {
    for (std::size_t lin : ki.thick_at(k)) {
      const DyadicCube q = cube_at(n, k, lin);
      for (const auto& b : covering_cubes(ki, q, c)) {
        if (b.level < k) out[cube_key(b)].push_back(q);
      }
    }
  }
  for (auto& [key, v] : out) std::sort(v.begin(), v.end());
  return out;
}

Iceberg iceberg(const DyadicCube& qbar, const std::vector<DyadicCube>& shadow_cubes) {
  Iceberg ice;
  if (shadow_cubes.empty()) return ice;
  std::vector<DyadicCube> cubes;
  int deepest = qbar.level;
  for (const auto& q : shadow_cubes) {
    deepest = std::max(deepest, q.level);
    for (int j = q.level - 1; j >= qbar.level; --j) cubes.push_back(ancestor(q, j));
  }
  std::sort(cubes.begin(), cubes.end());
  cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
  std::vector<DyadicCube> sorted_shadow = shadow_cubes;
  std::sort(sorted_shadow.begin(), sorted_shadow.end());
  std::erase_if(cubes, [&](const DyadicCube& q) {
    return std::binary_search(sorted_shadow.begin(), sorted_shadow.end(), q);
  });
  ice.depth = deepest - qbar.level;
  ice.min_shadow_side = std::ldexp(1.0, -deepest);
  ice.layers.resize(static_cast<std::size_t>(ice.depth) + 1);
  for (const auto& q : cubes) ice.layers[q.level - qbar.level].push_back(q);
  ice.cubes = std::move(cubes);
  return ice;
}

std::vector<DyadicCube> tower(const KeystoneIndex& ki, const Point& x, int c) {
  if (c < 1 || c % 2 == 0) throw Error("dilation factor must be a positive odd integer");
  const int n = ki.dim();
  const std::int64_t r = (c - 1) / 2;
  std::vector<DyadicCube> out;
  for (int j = 0; j <= ki.resolution(); ++j) {
    const std::int64_t side = std::int64_t{1} << j;
    Index lo{}, hi{};
    bool empty = false;
    for (int i = 0; i < n; ++i) {
      const double t = std::ldexp(x[i], j);
      lo[i] = std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(t)) - 1 - r, 0);
      hi[i] = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(t)) + r + 1, side);
      if (lo[i] >= hi[i]) empty = true;
    }
    if (empty) continue;
    for_each_index(n, lo, hi, [&](const Index& m) {
      if (ki.is_thick(j, linear_index(n, j, m))) out.push_back(DyadicCube{n, j, m});
    });
  }
  return out;
}

std::vector<DyadicCube> tower(const KeystoneIndex& ki, const DyadicCube& q, int c) {
  if (c < 1 || c % 2 == 0) throw Error("dilation factor must be a positive odd integer");
  const int n = ki.dim();
  std::vector<DyadicCube> out;
  for (int j = 0; j <= ki.resolution(); ++j) {
    const std::int64_t side = std::int64_t{1} << j;
    Index lo{}, hi{};
    bool empty = false;
    for (int i = 0; i < n; ++i) {
      container_range(q.index[i], q.index[i] + 1, q.level, j, c, lo[i], hi[i]);
      lo[i] = std::max<std::int64_t>(lo[i], 0);
      hi[i] = std::min<std::int64_t>(hi[i], side);
      if (lo[i] >= hi[i]) empty = true;
    }
    if (empty) continue;
    for_each_index(n, lo, hi, [&](const Index& m) {
      if (ki.is_thick(j, linear_index(n, j, m))) out.push_back(DyadicCube{n, j, m});
    });
  }
  return out;
}

double Cavity::volume() const {
  return std::ldexp(static_cast<double>(cells.size()), -dim * resolution);
}

Cavity cavity(const KeystoneIndex& ki, const DyadicCube& q, int c, int kappa) {
  const int n = ki.dim(), K = ki.resolution();
  if (kappa < 1) throw Error("kappa must be positive");
  if (q.level + kappa > K) throw Error("cavity resolution exceeds the leaf level");
  const LatticeBox box = dilate(q, c);
  const int shift = K - q.level;
  Index lo{}, ext{};
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    lo[i] = box.lo[i] << shift;
    ext[i] = (box.hi[i] - box.lo[i]) << shift;
    total *= static_cast<std::size_t>(ext[i]);
  }
  std::vector<std::uint8_t> removed(total, 0);
  auto offset = [&](const Index& m) {
    std::size_t r = 0;
    for (int i = 0; i < n; ++i) r = r * static_cast<std::size_t>(ext[i]) + static_cast<std::size_t>(m[i] - lo[i]);
    return r;
  };
  const std::int64_t rr = (c - 1) / 2;
  for (int j = q.level + kappa; j <= K; ++j) {
    const int s = K - j;
    for (std::size_t lin : ki.thick_at(j)) {
      const Index m = unlinear(n, j, lin);
      Index a{}, b{};
      bool empty = false;
      for (int i = 0; i < n; ++i) {
        a[i] = std::max<std::int64_t>((m[i] - rr) << s, lo[i]);
        b[i] = std::min<std::int64_t>((m[i] + 1 + rr) << s, lo[i] + ext[i]);
        if (a[i] >= b[i]) empty = true;
      }
      if (empty) continue;
      for_each_index(n, a, b, [&](const Index& cell) { removed[offset(cell)] = 1; });
    }
  }
  Cavity out{n, K, {}};
  Index hi{};
  for (int i = 0; i < n; ++i) hi[i] = lo[i] + ext[i];
  for_each_index(n, lo, hi, [&](const Index& cell) {
    if (!removed[offset(cell)]) out.cells.push_back(cell);
  });
  return out;
}

namespace {

// Inclusive prefix sums of a level grid, for box counts.
class PrefixCount {
 public:
  PrefixCount(int dim, int level, const std::vector<std::uint8_t>& flags)
      : dim_(dim), side_(std::int64_t{1} << level) {
    const std::size_t stride = static_cast<std::size_t>(side_) + 1;
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) total *= stride;
    sums_.assign(total, 0);
    Index lo{}, hi{};
    for (int i = 0; i < dim; ++i) hi[i] = side_;
    for_each_index(dim, lo, hi, [&](const Index& m) {
      Index p{};
      for (int i = 0; i < dim; ++i) p[i] = m[i] + 1;
      sums_[at(p)] = flags[linear_index(dim, level, m)];
    });
    for (int axis = 0; axis < dim; ++axis) {
      Index plo{}, phi{};
      for (int i = 0; i < dim; ++i) phi[i] = side_ + 1;
      plo[axis] = 1;
      for_each_index(dim, plo, phi, [&](const Index& p) {
        Index q = p;
        q[axis] -= 1;
        sums_[at(p)] += sums_[at(q)];
      });
    }
  }

  // Count over lo <= m < hi.
  std::int64_t count(const Index& lo, const Index& hi) const {
    std::int64_t total = 0;
    for (unsigned corner = 0; corner < (1u << dim_); ++corner) {
      Index p{};
      int sign = 1;
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
  std::vector<std::int64_t> sums_;
};

}  // namespace

std::vector<DyadicCube> porous_family(const KeystoneIndex& ki, int c) {
  if (c < 1 || c % 2 == 0) throw Error("dilation factor must be a positive odd integer");
  const int n = ki.dim(), K = ki.resolution();
  std::vector<PrefixCount> thin;
  thin.reserve(static_cast<std::size_t>(K) + 1);
  for (int j = 0; j <= K; ++j) {
    std::vector<std::uint8_t> flags(level_size(n, j));
    for (std::size_t lin = 0; lin < flags.size(); ++lin) flags[lin] = !ki.is_thick(j, lin);
    thin.emplace_back(n, j, flags);
  }
  int up = 0;
  while ((1 << (up + 1)) <= c) ++up;
  std::vector<DyadicCube> out;
  for (int k = 0; k <= K; ++k) {
    for (std::size_t lin : ki.thick_at(k)) {
      const DyadicCube q = cube_at(n, k, lin);
      const LatticeBox box = dilate(q, c);
      bool porous = false;
      for (int j = std::max(0, k - up); j <= std::min(K, k + 2) && !porous; ++j) {
        const std::int64_t side = std::int64_t{1} << j;
        Index lo{}, hi{};
        bool empty = false;
        for (int i = 0; i < n; ++i) {
          if (j >= k) {
            lo[i] = box.lo[i] << (j - k);
            hi[i] = box.hi[i] << (j - k);
          } else {
            const std::int64_t s = std::int64_t{1} << (k - j);
            lo[i] = ceil_div(box.lo[i], s);
            hi[i] = floor_div(box.hi[i], s);
          }
          lo[i] = std::max<std::int64_t>(lo[i], 0);
          hi[i] = std::min<std::int64_t>(hi[i], side);
          if (lo[i] >= hi[i]) empty = true;
        }
        if (!empty && thin[j].count(lo, hi) > 0) porous = true;
      }
      if (porous) out.push_back(q);
    }
  }
  return out;
}

}  // namespace stlab
