#pragma once

#include <vector>

#include "stlab/dyadic_set.hpp"
#include "stlab/frostman.hpp"
#include "stlab/grid.hpp"
#include "stlab/keystone.hpp"

namespace stlab {

// Indicator of [0,1] mollified by a normalized C^infty bump supported in
// [-1/10, 1/10]. The bump's distribution function is tabulated at step
// 2^-14 and interpolated linearly; psi0(t) = Phi(t) - Phi(t - 1), so the
// integer translates sum to one up to rounding.
double psi0(double t);
// Distribution function of the normalized bump.
double bump_cdf(double t);
// Largest slope of psi0, i.e. the peak of the bump.
double psi0_max_slope();
// psi_{k,m}(y) = prod_i psi0(2^k y_i - m_i).
double psi(int dim, int k, const Index& m, const Point& y);

// f_{k,m}, f_k and the data they depend on, for one function on the leaves.
class ApproxContext {
 public:
  // All references must outlive the context; f is indexed by leaf.
  ApproxContext(const DyadicSet& s, const KeystoneIndex& ki, const FrostmanSequence& seq,
                std::vector<double> f);

  const DyadicSet& set() const { return *set_; }
  const KeystoneIndex& keystone() const { return *ki_; }
  const FrostmanSequence& sequence() const { return *seq_; }
  const std::vector<double>& values() const { return f_; }
  int dim() const { return set_->dim(); }
  int kmax() const { return seq_->kmax(); }

  // m_k-average of f over a thick Q_{k,m}; zero otherwise.
  double cube_average(int k, const Index& m) const;
  // c_{k,m}: thick cubes among the neighbours of Q_{k,m}.
  int neighbor_count(int k, const Index& m) const;
  // f_{k,m}; zero when c_{k,m} = 0.
  double local_average(int k, const Index& m) const;
  bool in_tilde(int k, const Index& m) const;

  // f_0(y), ..., f_k(y) by the recursion.
  std::vector<double> fk_all(const Point& y, int k) const;
  double fk(int k, const Point& y) const { return fk_all(y, k).back(); }
  // f_k(y) = f_i(y) + sum_j S^j_{i,k}(y).
  double fk_explicit(int k, const Point& y, int i = 0) const;

  // Sum of psi_{k,m}(y) over m in tilde A_k and over its complement.
  void psi_split(int k, const Point& y, double& inside, double& outside) const;

  // Per level, m_k-averages of |f - c| over every cube of the level.
  std::vector<std::vector<double>> deviation_table(double c) const;

 private:
  struct Level {
    std::vector<double> cube_avg;
    std::vector<std::uint8_t> tilde;  // padded index range [-1, 2^k]^n
    std::vector<double> local;        // padded as above
    std::vector<std::int32_t> count;  // padded as above
  };
  std::size_t padded(int k, const Index& m, bool& inside) const;

  const DyadicSet* set_;
  const KeystoneIndex* ki_;
  const FrostmanSequence* seq_;
  std::vector<double> f_;
  std::vector<Level> levels_;
};

struct SupportingIndices {
  // Levels k with y in (14/5) Q_{k,m} for some thick Q_{k,m}.
  std::vector<int> lower;
  // Levels k with psi_{k,m}(y) != 0 for some m in tilde A_k.
  std::vector<int> upper;
  // The deepest computed level belongs to the set, so its true maximum may
  // lie beyond the depth of the approximating sequence.
  bool lower_truncated = false;
  bool upper_truncated = false;
};
SupportingIndices supporting(const ApproxContext& ctx, const Point& y);

// Samples f_kmax at the cell centers of w Q_{0,0}; cells inside marked
// leaves take the value of f. Kf < 0 selects K + 1.
GridField extend(const ApproxContext& ctx, int Kf = -1, int window = 4);
// f_k sampled on the same grid without the overwrite on S.
GridField sample_fk(const ApproxContext& ctx, int k, int Kf, int window);

// 2^k max over levels j in [kstar, k] and thick Q_{j,m} with y in (16/5)Q_{j,m}
// of the m_j-average of |f - c| over Q_{j,m}. kstar must be a lower supporting
// level of y.
double gradient_majorant(const ApproxContext& ctx, int k, int kstar, double c, const Point& y);
double gradient_majorant(const ApproxContext& ctx, const std::vector<std::vector<double>>& deviation,
                         int k, int kstar, const Point& y);

// Left minus right side of the partition-algebra identity at the given
// increasing levels.
double partition_identity_residual(const ApproxContext& ctx, const std::vector<int>& levels,
                                   const Point& y);

}  // namespace stlab
