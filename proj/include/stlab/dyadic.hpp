#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stlab {

inline constexpr int kMaxDim = 3;

using Index = std::array<std::int64_t, kMaxDim>;
using Point = std::array<double, kMaxDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Q_{k,m} = prod_i [m_i 2^-k, (m_i + 1) 2^-k]. Unused coordinates stay zero.
struct DyadicCube {
  int dim = 1;
  int level = 0;
  Index index{};

  double side() const;
  Point center() const;
  auto operator<=>(const DyadicCube&) const = default;
};

// Closed box prod_i [lo_i 2^-level, hi_i 2^-level].
struct LatticeBox {
  int dim = 1;
  int level = 0;
  Index lo{};
  Index hi{};

  bool contains_point(const Point& x) const;
  bool contains(const DyadicCube& q) const;
  bool intersects(const DyadicCube& q) const;
  auto operator<=>(const LatticeBox&) const = default;
};

DyadicCube root_cube(int dim);
DyadicCube parent(const DyadicCube& q);
DyadicCube ancestor(const DyadicCube& q, int level);
std::vector<DyadicCube> children(const DyadicCube& q);

// True when inner is a (non-strict) dyadic subcube of outer.
bool is_subcube(const DyadicCube& inner, const DyadicCube& outer);
bool in_unit_cube(const DyadicCube& q);

// cQ for odd c; concentric with Q, side c * l(Q).
LatticeBox dilate(const DyadicCube& q, int c);
// Same-level cubes meeting Q, i.e. the 3^n stencil.
std::vector<DyadicCube> neighbors(const DyadicCube& q);
// Same-level cubes meeting cQ.
std::vector<DyadicCube> gamma(const DyadicCube& q, int c);
// Multiplicity bound ([c] + 2)^n.
std::int64_t multiplicity_bound(int dim, double c);

// Level-k arrays over Q_{0,0} are stored row-major with axis 0 slowest, so
// linear order coincides with lexicographic order of indices.
inline std::size_t level_size(int dim, int level) {
  return std::size_t{1} << (dim * level);
}
std::size_t linear_index(int dim, int level, const Index& m);
Index unlinear(int dim, int level, std::size_t lin);
inline std::size_t linear_index(const DyadicCube& q) {
  return linear_index(q.dim, q.level, q.index);
}
inline DyadicCube cube_at(int dim, int level, std::size_t lin) {
  return DyadicCube{dim, level, unlinear(dim, level, lin)};
}

// Visits every index with lo <= m < hi componentwise, lexicographically.
void for_each_index(int dim, const Index& lo, const Index& hi,
                    const std::function<void(const Index&)>& fn);

std::string to_string(const DyadicCube& q);
void check_dim(int dim);

}  // namespace stlab
