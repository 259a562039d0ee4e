#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "stlab/dyadic_set.hpp"
#include "stlab/frostman.hpp"
#include "stlab/grid.hpp"
#include "stlab/keystone.hpp"

namespace stlab {

inline constexpr std::size_t kDefaultPairBudget = 1000000;

// Evaluates Phi(Q1, Q2) = (1/min(l1, l2)) times the m_{k1} x m_{k2} double
// average of |f(x) - f(y)| over Q1 x Q2, with k_i = level(Q_i). Pairs with at
// most `budget` leaf pairs are summed directly; larger pairs use a sorted
// sweep over one cube's values, which is also exact.
class PhiEngine {
 public:
  PhiEngine(const FrostmanSequence& seq, const std::vector<double>& f,
            std::size_t budget = kDefaultPairBudget);

  double operator()(const DyadicCube& q1, const DyadicCube& q2);
  std::size_t evaluations() const { return evaluations_; }
  std::size_t sweeps() const { return sweeps_; }

 private:
  struct Samples {
    std::vector<double> value;   // sorted ascending
    std::vector<double> weight;  // normalized to total one
    std::vector<double> cum_weight;
    std::vector<double> cum_moment;
    // Sums over indices >= i, kept apart to avoid differencing the totals.
    std::vector<double> tail_weight;
    std::vector<double> tail_moment;
  };
  const Samples& samples(const DyadicCube& q);
  // Weighted mean of |t - value| under the samples.
  static double spread(const Samples& s, double t);

  const FrostmanSequence* seq_;
  const std::vector<double>* f_;
  std::size_t budget_;
  std::unordered_map<CubeKey, Samples> cache_;
  std::size_t evaluations_ = 0;
  std::size_t sweeps_ = 0;
};

double phi(const std::vector<double>& f, const DyadicCube& q1, const DyadicCube& q2,
           const FrostmanSequence& seq, std::size_t budget = kDefaultPairBudget);

struct SharpField {
  // Level-K cells of c Q_{0,0}.
  GridField field;
  int c = 7;
  std::size_t pairs = 0;
  std::size_t lower_cubes = 0;
};

// Per-cube supremum of Phi over admissible covering pairs, as a level array
// indexed like the thick family.
std::vector<std::vector<double>> sharp_cube_values(const std::vector<double>& f, const KeystoneIndex& ki,
                                                   const FrostmanSequence& seq, int c,
                                                   std::size_t budget, std::size_t* pairs = nullptr);
SharpField sharp_field(const std::vector<double>& f, const KeystoneIndex& ki, const FrostmanSequence& seq,
                       int c = 7, std::size_t budget = kDefaultPairBudget);

struct TraceReport {
  double lp_m0 = 0.0;
  double sharp_lp = 0.0;
  double total = 0.0;
};

double lp_norm_m0(const std::vector<double>& f, const FrostmanSequence& seq, double p);
double lp_norm(const GridField& g, double p);
TraceReport trace_functional(const std::vector<double>& f, const KeystoneIndex& ki,
                             const FrostmanSequence& seq, double p, int c = 7,
                             std::size_t budget = kDefaultPairBudget);
TraceReport trace_functional(const std::vector<double>& f, const FrostmanSequence& seq,
                             const SharpField& sharp, double p);

// ||F||_p + sum_i ||D_i F||_p over the field window.
double sobolev_norm(const GridField& F, double p);

// Mean of F over the cells of each leaf; zero on unmarked leaves.
std::vector<double> trace(const GridField& F, const DyadicSet& s);

GridField hl_max(const GridField& F, double sigma, double s, double R);

struct RatioResult {
  double value = 0.0;
  bool zero_over_zero = false;
  bool infinite = false;
};

RatioResult poincare_ratio(const GridField& F, const DyadicCube& q, const KeystoneIndex& ki,
                           const FrostmanSequence& seq, const DyadicSet& s, double sigma);

double regularity_defect(const std::vector<double>& f, const KeystoneIndex& ki,
                         const FrostmanSequence& seq, const Index& leaf, int c, int depth);

}  // namespace stlab
