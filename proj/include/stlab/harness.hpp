#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stlab/analysis.hpp"
#include "stlab/dyadic_set.hpp"
#include "stlab/extension.hpp"
#include "stlab/frostman.hpp"
#include "stlab/keystone.hpp"

namespace stlab {

struct ExperimentConfig {
  int n = 2;
  int K = 8;
  int Kf = 9;
  std::string set = "full";
  std::uint64_t seed = 0;
  double dstar = 1.5;
  double d = 0.5;
  // lambda = lambda_frac * H^{dstar}(S) unless an absolute lambda > 0 is set.
  double lambda_frac = 0.4;
  double lambda = 0.0;
  double p = 1.8;
  double eps = 0.4;
  int c = 7;
  int kappa = 3;
  std::size_t budget = kDefaultPairBudget;

  double q() const { return p - eps; }
  // Ranges every command needs: dimension, levels, c odd, kappa, d in (0, n].
  void validate_structure() const;
  // Throws Error naming the first violated parameter constraint.
  // The direct variant additionally needs q in (1, n - d) and p > n - d.
  void validate(bool direct = false) const;
};

// The set named by cfg.set: a generator spec or a DSET file.
DyadicSet resolve_set(const ExperimentConfig& cfg);

// A set with its thick family and measures under a configuration.
struct Instance {
  DyadicSet set;
  double content_dstar = 0.0;
  double lambda = 0.0;
  KeystoneIndex keystone;
  FrostmanSequence sequence;
};
Instance make_instance(const ExperimentConfig& cfg, DyadicSet s, int kmax = -1);
// As above, also requiring lambda < H^{dstar}(S).
Instance checked_instance(const ExperimentConfig& cfg, DyadicSet s, int kmax = -1);

// Smooth fields on R^n: "zero", "const:<v>", "linear:<a1>,...", "trig:<seed>".
struct FieldSpec {
  enum class Kind { Zero, Constant, Linear, Trig };
  Kind kind = Kind::Trig;
  double value = 0.0;
  Point slope{};
  std::uint64_t seed = 0;

  static FieldSpec parse(const std::string& text);
  std::string label() const;
  FieldSpec shifted(std::uint64_t offset) const;
  double operator()(int dim, const Point& x) const;
};
GridField sample_field(const FieldSpec& spec, int dim, int Kf, int window);

// Functions on the leaves: "random-lipschitz[:seed]", "trace-of-smooth[:field]",
// "indicator", "const:<v>", "zero".
struct FunctionSource {
  enum class Kind { RandomLipschitz, TraceOfSmooth, Indicator, Constant, Zero };
  Kind kind = Kind::RandomLipschitz;
  std::uint64_t seed = 0;
  FieldSpec field;
  double value = 0.0;

  static FunctionSource parse(const std::string& text, std::uint64_t default_seed = 0);
  std::string label() const;
  FunctionSource shifted(std::uint64_t offset) const;
  bool smooth() const { return kind == Kind::TraceOfSmooth || kind == Kind::Constant || kind == Kind::Zero; }
};
// Leaf values; trace-of-smooth samples the field at level Kf.
std::vector<double> leaf_function(const FunctionSource& src, const DyadicSet& s, int Kf);

enum class Flag { Pass, Fail, Report, Trivial };
const char* flag_name(Flag f);
Flag parse_flag(const std::string& s);

struct AuditRow {
  std::string experiment;
  std::string instance;
  std::string quantity;
  double value = 0.0;
  std::optional<double> bound;
  Flag flag = Flag::Report;
};
// Pass iff value <= bound (with relative slack 1e-12).
AuditRow bounded_row(std::string experiment, std::string instance, std::string quantity, double value,
                     double bound);
// Report row; fails only when the value is not finite.
AuditRow report_row(std::string experiment, std::string instance, std::string quantity, double value);

void write_csv(std::ostream& out, const std::vector<AuditRow>& rows);
std::vector<AuditRow> read_csv(std::istream& in);
// Deterministic JSON summary of CSV files, keys sorted.
std::string summarize(const std::vector<std::pair<std::string, std::vector<AuditRow>>>& inputs);

struct ConvergenceAudit {
  std::size_t points = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  // max |f_k - f_s| / (2^{3 - k(y,k)} f#(y)) over checks with a positive bound.
  double max_ratio = 0.0;
  double max_excess = 0.0;
};
// All level-`grid` cell centers in (14/5) Q_{0,0}, all k <= s <= kmax.
ConvergenceAudit convergence_audit(const ApproxContext& ctx, const SharpField& sharp, int grid,
                                   double slack = 1e-10);

struct GradientAudit {
  std::size_t points = 0;
  std::size_t checks = 0;
  // max |grad f_k(y)| / M_{k,c}(y), k* the deepest lower supporting level <= k.
  double majorant_constant = 0.0;
  // max |grad f_k(y)| / (f#_7(y) + ||f||_{L_1(m_0)}).
  double sharp_constant = 0.0;
  std::size_t zero_over_zero = 0;
  std::size_t infinite = 0;
};
// Random points of (14/5) Q_{0,0} off the set; gradients by central
// differences with step 2^-(K+6).
GradientAudit gradient_audit(const ApproxContext& ctx, const SharpField& sharp7, std::size_t points,
                             std::uint64_t seed);

// Commands. Rows are ordered by instance, then by a fixed quantity order.
std::vector<AuditRow> run_content(const ExperimentConfig& cfg);
std::vector<AuditRow> run_keystone(const ExperimentConfig& cfg);
std::vector<AuditRow> run_frostman_audit(const ExperimentConfig& cfg);
std::vector<AuditRow> run_verify_reverse(const ExperimentConfig& cfg, const FunctionSource& src,
                                         int instances);
std::vector<AuditRow> run_verify_direct(const ExperimentConfig& cfg, const FieldSpec& field, int instances);
std::vector<AuditRow> run_roundtrip(const ExperimentConfig& cfg, const FunctionSource& src, int instances);
std::vector<AuditRow> run_packing_audit(const ExperimentConfig& cfg);

}  // namespace stlab
