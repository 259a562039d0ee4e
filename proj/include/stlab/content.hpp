#pragma once

#include <cstdint>
#include <vector>

#include "stlab/dyadic.hpp"
#include "stlab/dyadic_set.hpp"

namespace stlab {

inline constexpr double kThickTolerance = 1e-12;

// Dyadic d-content of S inside every cube of the tree:
// h(leaf) = 2^{-Kd} on marked leaves, h(Q) = min(l(Q)^d, sum over children).
class ContentTree {
 public:
  ContentTree() = default;
  ContentTree(int dim, int resolution, double d, std::vector<std::vector<double>> values);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  double d() const { return d_; }

  // Zero for cubes outside Q_{0,0} or below the leaf level.
  double value(const DyadicCube& q) const;
  double value(int level, std::size_t lin) const { return values_[level][lin]; }
  const std::vector<double>& level_values(int level) const { return values_[level]; }
  double root() const { return values_[0][0]; }
  // l(Q)^d for a cube of the given level.
  double cap(int level) const { return caps_[level]; }

 private:
  int dim_ = 1;
  int resolution_ = 0;
  double d_ = 0.0;
  std::vector<std::vector<double>> values_;
  std::vector<double> caps_;
};

ContentTree content_tree(const DyadicSet& s, double d);
// Root content of the union of the given level-K leaves.
double content_of_marks(int dim, int resolution, const std::vector<std::uint8_t>& marks, double d);

bool is_thick(const ContentTree& h, const DyadicCube& q, double lambda);
bool is_thick_value(double h, double cap, double lambda);

}  // namespace stlab
