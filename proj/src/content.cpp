#include "stlab/content.hpp"

#include <algorithm>
#include <cmath>

namespace stlab {

ContentTree::ContentTree(int dim, int resolution, double d, std::vector<std::vector<double>> values)
    : dim_(dim), resolution_(resolution), d_(d), values_(std::move(values)) {
  caps_.resize(static_cast<std::size_t>(resolution_) + 1);
  for (int k = 0; k <= resolution_; ++k) caps_[k] = std::exp2(-static_cast<double>(k) * d_);
}

double ContentTree::value(const DyadicCube& q) const {
  if (q.level < 0 || q.level > resolution_ || !in_unit_cube(q)) return 0.0;
  return values_[q.level][linear_index(q)];
}

namespace {

std::vector<std::vector<double>> build_levels(int dim, int resolution,
                                              const std::vector<std::uint8_t>& marks, double d) {
  std::vector<std::vector<double>> values(static_cast<std::size_t>(resolution) + 1);
  const double leaf = std::exp2(-static_cast<double>(resolution) * d);
  values[resolution].resize(marks.size());
  for (std::size_t i = 0; i < marks.size(); ++i) values[resolution][i] = marks[i] ? leaf : 0.0;
  const std::size_t fan = std::size_t{1} << dim;
  for (int k = resolution - 1; k >= 0; --k) {
    const double cap = std::exp2(-static_cast<double>(k) * d);
    const auto& below = values[k + 1];
    auto& here = values[k];
    here.assign(level_size(dim, k), 0.0);
    for (std::size_t lin = 0; lin < here.size(); ++lin) {
      const Index m = unlinear(dim, k, lin);
      // Children are summed pairwise along each axis.
      double sums[8];
      for (std::size_t b = 0; b < fan; ++b) {
        Index c{};
        for (int i = 0; i < dim; ++i) c[i] = 2 * m[i] + static_cast<std::int64_t>((b >> (dim - 1 - i)) & 1u);
        sums[b] = below[linear_index(dim, k + 1, c)];
      }
      for (std::size_t width = fan; width > 1; width /= 2)
        for (std::size_t b = 0; b < width / 2; ++b) sums[b] = sums[2 * b] + sums[2 * b + 1];
      here[lin] = std::min(cap, sums[0]);
    }
  }
  return values;
}

}  // namespace

ContentTree content_tree(const DyadicSet& s, double d) {
  if (!(d >= 0.0) || d > s.dim()) throw Error("content exponent must lie in [0, n]");
  return ContentTree(s.dim(), s.resolution(), d, build_levels(s.dim(), s.resolution(), s.marks(), d));
}

double content_of_marks(int dim, int resolution, const std::vector<std::uint8_t>& marks, double d) {
  if (marks.size() != level_size(dim, resolution)) throw Error("mark vector has wrong size");
  return build_levels(dim, resolution, marks, d)[0][0];
}

bool is_thick_value(double h, double cap, double lambda) {
  return h > 0.0 && h + kThickTolerance * cap >= lambda * cap;
}

bool is_thick(const ContentTree& h, const DyadicCube& q, double lambda) {
  const int k = q.level;
  if (k < 0 || k > h.resolution()) return false;
  return is_thick_value(h.value(q), h.cap(k), lambda);
}

}  // namespace stlab
