#include "stlab/grid.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace stlab {

GridField::GridField(int dim, int resolution, int window)
    : dim_(dim), resolution_(resolution), window_(window) {
  check_dim(dim);
  if (window < 1) throw Error("window must be a positive integer");
  if (resolution < 0) throw Error("field resolution must be nonnegative");
  if (window % 2 == 0 && resolution < 1) throw Error("even window needs resolution >= 1");
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(cells_per_axis());
  if (total > (std::size_t{1} << 28)) throw Error("field too large");
  values_.assign(total, 0.0);
}

double GridField::cell_size() const { return std::ldexp(1.0, -resolution_); }

double GridField::cell_volume() const { return std::ldexp(1.0, -dim_ * resolution_); }

std::int64_t GridField::lattice_offset() const {
  // origin * 2^Kf, exact because origin is a half-integer.
  return static_cast<std::int64_t>(std::ldexp(origin(), resolution_));
}

Index GridField::cell(std::size_t lin) const {
  Index m{};
  const auto n = static_cast<std::size_t>(cells_per_axis());
  for (int i = dim_ - 1; i >= 0; --i) {
    m[i] = static_cast<std::int64_t>(lin % n);
    lin /= n;
  }
  return m;
}

std::size_t GridField::linear(const Index& c) const {
  std::size_t r = 0;
  const auto n = static_cast<std::size_t>(cells_per_axis());
  for (int i = 0; i < dim_; ++i) r = r * n + static_cast<std::size_t>(c[i]);
  return r;
}

Point GridField::center(std::size_t lin) const {
  const Index c = cell(lin);
  Point x{};
  const double h = cell_size();
  for (int i = 0; i < dim_; ++i) x[i] = origin() + (static_cast<double>(c[i]) + 0.5) * h;
  return x;
}

std::optional<std::size_t> GridField::locate(const Point& x) const {
  Index c{};
  for (int i = 0; i < dim_; ++i) {
    const double t = std::floor(std::ldexp(x[i] - origin(), resolution_));
    if (t < 0.0 || t >= static_cast<double>(cells_per_axis())) return std::nullopt;
    c[i] = static_cast<std::int64_t>(t);
  }
  return linear(c);
}

double GridField::value_at(const Point& x) const {
  const auto lin = locate(x);
  return lin ? values_[*lin] : 0.0;
}

std::vector<std::vector<double>> GridField::gradient() const {
  std::vector<std::vector<double>> grad(static_cast<std::size_t>(dim_), std::vector<double>(values_.size(), 0.0));
  const std::int64_t n = cells_per_axis();
  const double h = cell_size();
  std::size_t stride = 1;
  for (int axis = dim_ - 1; axis >= 0; --axis) {
    auto& g = grad[static_cast<std::size_t>(axis)];
    for (std::size_t lin = 0; lin < values_.size(); ++lin) {
      const std::int64_t c = static_cast<std::int64_t>((lin / stride) % static_cast<std::size_t>(n));
      if (n == 1) continue;
      if (c == 0) {
        g[lin] = (values_[lin + stride] - values_[lin]) / h;
      } else if (c == n - 1) {
        g[lin] = (values_[lin] - values_[lin - stride]) / h;
      } else {
        g[lin] = (values_[lin + stride] - values_[lin - stride]) / (2.0 * h);
      }
    }
    stride *= static_cast<std::size_t>(n);
  }
  return grad;
}

void write_field(std::ostream& out, const GridField& f) {
  out << "GFIELD v1 n=" << f.dim() << " Kf=" << f.resolution() << " w=" << f.window() << '\n';
  char buf[40];
  for (double v : f.values()) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << '\n';
  }
}

GridField read_field(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("malformed header: empty input");
  int n = 0, kf = 0, w = 0;
  if (std::sscanf(header.c_str(), "GFIELD v1 n=%d Kf=%d w=%d", &n, &kf, &w) != 3)
    throw Error("malformed header: " + header);
  GridField f(n, kf, w);
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= f.size()) throw Error("too many field values");
    f[i++] = std::stod(line);
  }
  if (i != f.size()) throw Error("too few field values");
  return f;
}

}  // namespace stlab
