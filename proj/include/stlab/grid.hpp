#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stlab/dyadic.hpp"

namespace stlab {

// Values at the centers of the level-Kf cells tiling w Q_{0,0}.
class GridField {
 public:
  GridField() = default;
  GridField(int dim, int resolution, int window);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  int window() const { return window_; }
  std::int64_t cells_per_axis() const { return static_cast<std::int64_t>(window_) << resolution_; }
  std::size_t size() const { return values_.size(); }
  double cell_size() const;
  double cell_volume() const;
  // Lower corner of w Q_{0,0}; a dyadic rational.
  double origin() const { return 0.5 - 0.5 * window_; }
  // Offset of the level-Kf lattice index of the first cell.
  std::int64_t lattice_offset() const;

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  Index cell(std::size_t lin) const;
  std::size_t linear(const Index& cell) const;
  Point center(std::size_t lin) const;
  std::optional<std::size_t> locate(const Point& x) const;
  // Value of the cell containing x, zero outside the window.
  double value_at(const Point& x) const;

  // Central differences at spacing 2^{-Kf}; one-sided at the window edge.
  std::vector<std::vector<double>> gradient() const;

  bool operator==(const GridField&) const = default;

 private:
  int dim_ = 1;
  int resolution_ = 0;
  int window_ = 1;
  std::vector<double> values_;
};

void write_field(std::ostream& out, const GridField& f);
GridField read_field(std::istream& in);

}  // namespace stlab
