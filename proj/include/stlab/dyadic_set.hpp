#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stlab/dyadic.hpp"

namespace stlab {

// Union of marked level-K leaves of Q_{0,0}.
class DyadicSet {
 public:
  DyadicSet() = default;
  DyadicSet(int dim, int resolution, std::vector<std::uint8_t> marks,
            std::string label);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  const std::string& label() const { return label_; }
  std::size_t leaf_count() const { return marks_.size(); }
  const std::vector<std::uint8_t>& marks() const { return marks_; }

  bool is_marked(std::size_t lin) const { return marks_[lin] != 0; }
  bool is_marked(const Index& m) const;
  std::size_t marked_count() const { return marked_count_; }
  std::vector<Index> marked_indices() const;
  std::vector<std::size_t> marked_linear() const;

  bool operator==(const DyadicSet& other) const = default;

 private:
  int dim_ = 1;
  int resolution_ = 0;
  std::vector<std::uint8_t> marks_;
  std::size_t marked_count_ = 0;
  std::string label_;
};

enum class Generator { Full, SingleLeaf, CantorDyadic, Dust2d, Percolation, RasterSegment };

struct GeneratorSpec {
  Generator kind = Generator::Full;
  // SingleLeaf: leaf index.
  Index leaf{};
  // CantorDyadic: keep mask over 2^s subintervals per axis, applied every s levels.
  // Dust2d: keep mask over quadrants in lexicographic order (00, 01, 10, 11).
  std::vector<bool> mask;
  // Percolation: retention probability.
  double probability = 0.5;
  // RasterSegment: endpoints in [0,1]^n.
  Point from{};
  Point to{};
  int coords = 0;

  // Parses "full", "single:i,j", "cantor:1001", "dust:1001", "perc:0.7",
  // "segment:x0,y0;x1,y1".
  static GeneratorSpec parse(const std::string& text);
  std::string label() const;
};

DyadicSet generate_set(int dim, int resolution, const GeneratorSpec& spec,
                       std::uint64_t seed);

// DSET v1 text format.
void write_set(std::ostream& out, const DyadicSet& s);
DyadicSet read_set(std::istream& in);
void save_set(const std::string& path, const DyadicSet& s);
DyadicSet load_set(const std::string& path);

}  // namespace stlab
