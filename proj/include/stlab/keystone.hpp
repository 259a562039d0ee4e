#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "stlab/content.hpp"
#include "stlab/dyadic.hpp"
#include "stlab/dyadic_set.hpp"

namespace stlab {

// Packs (level, linear index) of a cube inside Q_{0,0}.
using CubeKey = std::uint64_t;
inline CubeKey cube_key(int level, std::size_t lin) {
  return (static_cast<CubeKey>(level) << 58) | static_cast<CubeKey>(lin);
}
inline CubeKey cube_key(const DyadicCube& q) { return cube_key(q.level, linear_index(q)); }
DyadicCube cube_from_key(int dim, CubeKey key);

// Thick family DF(d, lambda) of a set together with the content tree.
class KeystoneIndex {
 public:
  KeystoneIndex() = default;
  KeystoneIndex(ContentTree h, double lambda);

  const ContentTree& content() const { return h_; }
  int dim() const { return h_.dim(); }
  int resolution() const { return h_.resolution(); }
  double d() const { return h_.d(); }
  double lambda() const { return lambda_; }

  bool is_thick(const DyadicCube& q) const;
  bool is_thick(int level, std::size_t lin) const { return thick_[level][lin] != 0; }
  // Some cube of the 3^n stencil of q is thick.
  bool in_tilde(const DyadicCube& q) const;
  // Linear indices of the thick cubes of the given level, ascending.
  const std::vector<std::size_t>& thick_at(int level) const { return thick_list_[level]; }
  std::vector<DyadicCube> df() const;
  std::size_t df_size() const;

  // Level of the nearest thick strict ancestor, -1 if there is none.
  int nearest_thick_ancestor_level(const DyadicCube& q) const;
  std::optional<DyadicCube> nearest_thick_ancestor(const DyadicCube& q) const;

 private:
  ContentTree h_;
  double lambda_ = 0.0;
  std::vector<std::vector<std::uint8_t>> thick_;
  std::vector<std::vector<std::size_t>> thick_list_;
  std::vector<std::vector<std::int8_t>> ancestor_level_;
};

KeystoneIndex keystone(const DyadicSet& s, double d, double lambda);

struct Decomposition {
  std::vector<std::vector<DyadicCube>> generations;
  // Content of the marked leaves lying outside the union of each generation.
  std::vector<double> defect;
};

// Inclusion-maximal thick cubes strictly inside q.
std::vector<DyadicCube> maximal_thick_below(const KeystoneIndex& ki, const DyadicCube& q);
Decomposition canonical_decomposition(const KeystoneIndex& ki, const DyadicSet& s);
// Marked leaves covered by every generation; a generation cube at the leaf
// level keeps covering its leaf in all later generations.
std::vector<Index> essential_cells(const KeystoneIndex& ki, const Decomposition& dec,
                                   const DyadicSet& s);

// Thick cubes Qbar with l(Qbar) >= l(Q) and Q inside c Qbar such that no thick
// cube strictly between Q and Qbar in size contains Q.
std::vector<DyadicCube> covering_cubes(const KeystoneIndex& ki, const DyadicCube& q, int c,
                                       bool strong = false);
// Smallest side first, then lexicographically smallest index.
DyadicCube select_covering(const std::vector<DyadicCube>& candidates);

// Thick cubes Q smaller than qbar with qbar among their covering cubes.
std::vector<DyadicCube> shadow(const KeystoneIndex& ki, const DyadicCube& qbar, int c);
// Shadows of every thick cube at once.
std::unordered_map<CubeKey, std::vector<DyadicCube>> shadow_map(const KeystoneIndex& ki, int c);

struct Iceberg {
  std::vector<DyadicCube> cubes;
  // layers[j]: iceberg cubes of side 2^{-j} l(qbar).
  std::vector<std::vector<DyadicCube>> layers;
  double min_shadow_side = 0.0;
  int depth = -1;
};
Iceberg iceberg(const DyadicCube& qbar, const std::vector<DyadicCube>& shadow_cubes);

// Thick cubes Q' with the target inside c Q', ordered by level then index.
std::vector<DyadicCube> tower(const KeystoneIndex& ki, const Point& x, int c);
std::vector<DyadicCube> tower(const KeystoneIndex& ki, const DyadicCube& q, int c);

struct Cavity {
  int dim = 1;
  int resolution = 0;
  // Level-K cells of cQ left after removing cQ' for thick Q' at least
  // kappa levels below Q.
  std::vector<Index> cells;
  double volume() const;
};
Cavity cavity(const KeystoneIndex& ki, const DyadicCube& q, int c, int kappa = 3);

// Thick Q with cQ containing a non-thick cube of the tree of side >= l(Q)/4.
std::vector<DyadicCube> porous_family(const KeystoneIndex& ki, int c);

}  // namespace stlab
