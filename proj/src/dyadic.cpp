#include "stlab/dyadic.hpp"

#include <cmath>
#include <sstream>

namespace stlab {

namespace {

std::int64_t floor_div_pow2(std::int64_t a, int shift) {
  // Arithmetic shift floors for negative values too.
  return a >> shift;
}

}  // namespace

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw Error("dimension must be 1, 2 or 3");
}

double DyadicCube::side() const { return std::ldexp(1.0, -level); }

Point DyadicCube::center() const {
  Point x{};
  for (int i = 0; i < dim; ++i) x[i] = std::ldexp(static_cast<double>(index[i]) + 0.5, -level);
  return x;
}

bool LatticeBox::contains_point(const Point& x) const {
  for (int i = 0; i < dim; ++i) {
    const double a = std::ldexp(static_cast<double>(lo[i]), -level);
    const double b = std::ldexp(static_cast<double>(hi[i]), -level);
    if (x[i] < a || x[i] > b) return false;
  }
  return true;
}

bool LatticeBox::contains(const DyadicCube& q) const {
  for (int i = 0; i < dim; ++i) {
    std::int64_t a = lo[i], b = hi[i], ql = q.index[i], qh = q.index[i] + 1;
    if (q.level >= level) {
      a <<= (q.level - level);
      b <<= (q.level - level);
    } else {
      ql <<= (level - q.level);
      qh <<= (level - q.level);
    }
    if (ql < a || qh > b) return false;
  }
  return true;
}

bool LatticeBox::intersects(const DyadicCube& q) const {
  for (int i = 0; i < dim; ++i) {
    std::int64_t a = lo[i], b = hi[i], ql = q.index[i], qh = q.index[i] + 1;
    if (q.level >= level) {
      a <<= (q.level - level);
      b <<= (q.level - level);
    } else {
      ql <<= (level - q.level);
      qh <<= (level - q.level);
    }
    if (qh < a || ql > b) return false;
  }
  return true;
}

DyadicCube root_cube(int dim) {
  check_dim(dim);
  return DyadicCube{dim, 0, Index{}};
}

DyadicCube parent(const DyadicCube& q) {
  if (q.level <= 0) throw Error("root has no parent");
  return ancestor(q, q.level - 1);
}

DyadicCube ancestor(const DyadicCube& q, int level) {
  if (level > q.level) throw Error("ancestor level exceeds cube level");
  DyadicCube a{q.dim, level, Index{}};
  for (int i = 0; i < q.dim; ++i) a.index[i] = floor_div_pow2(q.index[i], q.level - level);
  return a;
}

std::vector<DyadicCube> children(const DyadicCube& q) {
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << q.dim);
  for (unsigned bits = 0; bits < (1u << q.dim); ++bits) {
    DyadicCube c{q.dim, q.level + 1, Index{}};
    for (int i = 0; i < q.dim; ++i) {
      const unsigned b = (bits >> (q.dim - 1 - i)) & 1u;
      c.index[i] = 2 * q.index[i] + b;
    }
    out.push_back(c);
  }
  return out;
}

bool is_subcube(const DyadicCube& inner, const DyadicCube& outer) {
  if (inner.dim != outer.dim || inner.level < outer.level) return false;
  return ancestor(inner, outer.level) == outer;
}

bool in_unit_cube(const DyadicCube& q) {
  if (q.level < 0) return false;
  const std::int64_t n = std::int64_t{1} << q.level;
  for (int i = 0; i < q.dim; ++i)
    if (q.index[i] < 0 || q.index[i] >= n) return false;
  return true;
}

LatticeBox dilate(const DyadicCube& q, int c) {
  if (c < 1 || c % 2 == 0) throw Error("dilation factor must be a positive odd integer");
  const std::int64_t r = (c - 1) / 2;
  LatticeBox b{q.dim, q.level, Index{}, Index{}};
  for (int i = 0; i < q.dim; ++i) {
    b.lo[i] = q.index[i] - r;
    b.hi[i] = q.index[i] + 1 + r;
  }
  return b;
}

std::vector<DyadicCube> neighbors(const DyadicCube& q) { return gamma(q, 1); }

std::vector<DyadicCube> gamma(const DyadicCube& q, int c) {
  const LatticeBox b = dilate(q, c);
  Index lo{}, hi{};
  for (int i = 0; i < q.dim; ++i) {
    lo[i] = b.lo[i] - 1;
    hi[i] = b.hi[i] + 1;
  }
  std::vector<DyadicCube> out;
  for_each_index(q.dim, lo, hi, [&](const Index& m) { out.push_back(DyadicCube{q.dim, q.level, m}); });
  return out;
}

std::int64_t multiplicity_bound(int dim, double c) {
  const auto base = static_cast<std::int64_t>(std::floor(c)) + 2;
  std::int64_t r = 1;
  for (int i = 0; i < dim; ++i) r *= base;
  return r;
}

std::size_t linear_index(int dim, int level, const Index& m) {
  std::size_t r = 0;
  for (int i = 0; i < dim; ++i) r = (r << level) | static_cast<std::size_t>(m[i]);
  return r;
}

Index unlinear(int dim, int level, std::size_t lin) {
  Index m{};
  const std::size_t mask = (std::size_t{1} << level) - 1;
  for (int i = dim - 1; i >= 0; --i) {
    m[i] = static_cast<std::int64_t>(lin & mask);
    lin >>= level;
  }
  return m;
}

void for_each_index(int dim, const Index& lo, const Index& hi,
                    const std::function<void(const Index&)>& fn) {
  for (int i = 0; i < dim; ++i)
    if (hi[i] <= lo[i]) return;
  Index m = lo;
  while (true) {
    fn(m);
    int i = dim - 1;
    while (i >= 0) {
      if (++m[i] < hi[i]) break;
      m[i] = lo[i];
      --i;
    }
    if (i < 0) return;
  }
}

std::string to_string(const DyadicCube& q) {
  std::ostringstream os;
  os << "Q(" << q.level << ";";
  for (int i = 0; i < q.dim; ++i) os << (i ? "," : "") << q.index[i];
  os << ")";
  return os.str();
}

}  // namespace stlab
