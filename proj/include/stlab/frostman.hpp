#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stlab/content.hpp"
#include "stlab/dyadic_set.hpp"

namespace stlab {

// Measures m_0..m_kmax on the marked leaves. Each measure has constant
// density on every leaf; weights[k][leaf] is the mass of the leaf.
class FrostmanSequence {
 public:
  FrostmanSequence() = default;
  FrostmanSequence(int dim, int resolution, double d, std::vector<std::vector<double>> weights);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  double d() const { return d_; }
  int kmax() const { return static_cast<int>(weights_.size()) - 1; }

  const std::vector<double>& weights(int k) const { return weights_[k]; }
  std::vector<double>& mutable_weights(int k) { return weights_[k]; }
  double total_mass(int k) const;
  // m_k(Q) for a cube of level at most K.
  double mass(int k, const DyadicCube& q) const;
  // m_k masses of every cube of a level, as a level array.
  std::vector<double> level_masses(int k, int level) const;
  // w_k = m_k / m_0 on a leaf; zero off the set.
  double density(int k, std::size_t leaf) const;
  // m_k-average of leaf values over q; zero if m_k(q) = 0.
  double average(int k, const DyadicCube& q, const std::vector<double>& values) const;

  bool operator==(const FrostmanSequence&) const = default;

 private:
  int dim_ = 1;
  int resolution_ = 0;
  double d_ = 0.0;
  std::vector<std::vector<double>> weights_;
};

// kmax < 0 selects K - 2 (at least 0).
FrostmanSequence build_sequence(const DyadicSet& s, double d, int kmax = -1);

struct FrostmanAudit {
  // sup m_k(Q_{j,m}) / 2^{-jd} over j >= k.
  double c1 = 0.0;
  // inf m_k(Q_{k,m}) / H^d(Q_{k,m} cap S) over cubes meeting S.
  double c2 = 0.0;
  // Smallest C3 with C3^-1 2^{(d-n)j} w_{k+j} <= w_k <= C3 w_{k+j}; capped.
  double c3 = 0.0;
  bool c3_capped = false;
  // sup m_k(Q_l(x)) / l^d over sampled cubes with l <= 2^{-k}.
  double arbitrary_cube = 0.0;
  std::size_t sampled_cubes = 0;
};

inline constexpr double kC3Ceiling = 1e6;

FrostmanAudit audit_sequence(const FrostmanSequence& seq, const ContentTree& h,
                             std::uint64_t seed, std::size_t samples_per_level = 200);

// m_k of an axis-parallel cube with lower corner `corner` and side l.
double cube_measure(const FrostmanSequence& seq, int k, const Point& corner, double side);

void write_sequence(std::ostream& out, const FrostmanSequence& seq);
FrostmanSequence read_sequence(std::istream& in);

}  // namespace stlab
