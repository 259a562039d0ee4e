#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "stlab/harness.hpp"

using namespace stlab;

namespace {

ExperimentConfig small(int K = 5) {
  ExperimentConfig cfg;
  cfg.K = K;
  cfg.Kf = K + 1;
  return cfg;
}

bool throws_hypothesis(const ExperimentConfig& cfg, bool direct = false) {
  try {
    cfg.validate(direct);
  } catch (const Error& e) {
    return std::string(e.what()).rfind("hypothesis violated", 0) == 0;
  }
  return false;
}

std::size_t count_flag(const std::vector<AuditRow>& rows, Flag f) {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.flag == f;
  return n;
}

}  // namespace

TEST(Config, DefaultsSatisfyBothTheorems) {
  const ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.validate(false));
  EXPECT_NO_THROW(cfg.validate(true));
  EXPECT_DOUBLE_EQ(cfg.q(), 1.4);
}

TEST(Config, OpenIntervalsAreOpen) {
  // n = 2, p = 1.8, d* = 1.5, eps = 0.4: d must lie in (0.2, 0.6). The
  // endpoints themselves are not representable exactly, so probe just outside.
  auto cfg = ExperimentConfig{};
  cfg.d = 0.19;
  EXPECT_TRUE(throws_hypothesis(cfg));
  cfg.d = 0.61;
  EXPECT_TRUE(throws_hypothesis(cfg));
  cfg.d = 0.59;
  EXPECT_FALSE(throws_hypothesis(cfg));
  cfg = ExperimentConfig{};
  cfg.eps = 0.8;  // min{p - (n - d*), p - 1} = 0.8
  EXPECT_TRUE(throws_hypothesis(cfg));
  cfg = ExperimentConfig{};
  cfg.dstar = 0.15;  // below n - p
  EXPECT_TRUE(throws_hypothesis(cfg));
  cfg = ExperimentConfig{};
  cfg.p = 2.0;
  cfg.eps = 0.5;
  cfg.d = 0.3;
  EXPECT_FALSE(throws_hypothesis(cfg));
  cfg.p = 2.05;
  EXPECT_TRUE(throws_hypothesis(cfg));
  cfg = ExperimentConfig{};
  cfg.p = 1.0;
  EXPECT_TRUE(throws_hypothesis(cfg));
}

TEST(Config, StructuralLimits) {
  auto cfg = ExperimentConfig{};
  cfg.c = 5;
  EXPECT_TRUE(throws_hypothesis(cfg));
  EXPECT_NO_THROW(cfg.validate_structure());
  cfg.c = 8;
  EXPECT_THROW(cfg.validate_structure(), Error);
  cfg = ExperimentConfig{};
  cfg.kappa = cfg.K + 1;
  EXPECT_THROW(cfg.validate_structure(), Error);
  cfg = ExperimentConfig{};
  cfg.Kf = cfg.K - 1;
  EXPECT_THROW(cfg.validate_structure(), Error);
  cfg = ExperimentConfig{};
  cfg.n = 4;
  EXPECT_THROW(cfg.validate_structure(), Error);
  cfg = ExperimentConfig{};
  cfg.lambda_frac = 1.0;
  EXPECT_THROW(cfg.validate_structure(), Error);
  cfg.lambda = 0.3;
  EXPECT_NO_THROW(cfg.validate_structure());
}

TEST(Instance, LambdaFollowsContent) {
  auto cfg = small();
  const auto inst = checked_instance(cfg, resolve_set(cfg));
  EXPECT_DOUBLE_EQ(inst.content_dstar, 1.0);
  EXPECT_DOUBLE_EQ(inst.lambda, 0.4);
  EXPECT_EQ(inst.sequence.kmax(), cfg.K - 2);
  cfg.lambda = 1.0;
  EXPECT_THROW(checked_instance(cfg, resolve_set(cfg)), Error);
}

TEST(Fields, ParseAndLabels) {
  EXPECT_EQ(FieldSpec::parse("trig:7").label(), "trig:7");
  EXPECT_EQ(FieldSpec::parse("zero").label(), "zero");
  const auto lin = FieldSpec::parse("linear:2,-1");
  EXPECT_DOUBLE_EQ(lin(2, Point{0.5, 0.25, 0}), 0.75);
  EXPECT_DOUBLE_EQ(FieldSpec::parse("const:3.5")(2, Point{}), 3.5);
  EXPECT_THROW(FieldSpec::parse("wave"), Error);
  EXPECT_THROW(FieldSpec::parse("trig:x"), Error);
  const auto t = FieldSpec::parse("trig:3");
  EXPECT_EQ(t(2, Point{0.1, 0.7, 0}), t(2, Point{0.1, 0.7, 0}));
  EXPECT_NE(t.shifted(1).label(), t.label());
  const auto g = sample_field(lin, 2, 4, 3);
  EXPECT_DOUBLE_EQ(g.value_at(Point{0.5 + 1.0 / 32, 0.5 + 1.0 / 32, 0}), 2 * (0.5 + 1.0 / 32) - (0.5 + 1.0 / 32));
}

TEST(Functions, SourcesOnTheSet) {
  const auto s = generate_set(2, 4, GeneratorSpec::parse("dust:1001"), 0);
  for (const std::string spec : {"random-lipschitz:3", "trace-of-smooth:trig:2", "indicator", "const:2", "zero"}) {
    const auto src = FunctionSource::parse(spec);
    const auto f = leaf_function(src, s, 5);
    ASSERT_EQ(f.size(), s.leaf_count());
    for (std::size_t i = 0; i < f.size(); ++i) {
      EXPECT_TRUE(std::isfinite(f[i]));
      if (!s.is_marked(i)) EXPECT_EQ(f[i], 0.0) << spec;
    }
    EXPECT_EQ(leaf_function(src, s, 5), f);
  }
  const auto ind = leaf_function(FunctionSource::parse("indicator"), s, 5);
  EXPECT_EQ(ind[linear_index(2, 4, Index{1, 1, 0})], 1.0);
  EXPECT_EQ(ind[linear_index(2, 4, Index{12, 12, 0})], 0.0);
  EXPECT_THROW(FunctionSource::parse("sawtooth"), Error);
}

TEST(Rows, Flags) {
  EXPECT_EQ(bounded_row("e", "i", "q", 1.0, 1.0).flag, Flag::Pass);
  EXPECT_EQ(bounded_row("e", "i", "q", 1.0 + 1e-13, 1.0).flag, Flag::Pass);
  EXPECT_EQ(bounded_row("e", "i", "q", 1.0 + 1e-9, 1.0).flag, Flag::Fail);
  EXPECT_EQ(bounded_row("e", "i", "q", std::nan(""), 1.0).flag, Flag::Fail);
  EXPECT_EQ(report_row("e", "i", "q", 3.0).flag, Flag::Report);
  EXPECT_EQ(report_row("e", "i", "q", std::numeric_limits<double>::infinity()).flag, Flag::Fail);
  for (Flag f : {Flag::Pass, Flag::Fail, Flag::Report, Flag::Trivial}) EXPECT_EQ(parse_flag(flag_name(f)), f);
}

TEST(Csv, RoundTripWithQuoting) {
  std::vector<AuditRow> rows{bounded_row("exp", "segment:0.1,0.2;0.9,0.7", "q\"x", 0.1, 0.3),
                             report_row("exp", "plain", "r", 1.0 / 3.0),
                             AuditRow{"exp", "t", "z", 0.0, std::nullopt, Flag::Trivial}};
  std::stringstream buf;
  write_csv(buf, rows);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), "experiment,instance,quantity,value,bound,flag");
  const auto back = read_csv(buf);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].experiment, rows[i].experiment);
    EXPECT_EQ(back[i].instance, rows[i].instance);
    EXPECT_EQ(back[i].quantity, rows[i].quantity);
    EXPECT_EQ(back[i].value, rows[i].value);
    EXPECT_EQ(back[i].bound, rows[i].bound);
    EXPECT_EQ(back[i].flag, rows[i].flag);
  }
}

TEST(Csv, RejectsMalformedInput) {
  std::stringstream header("a,b,c\n");
  EXPECT_THROW(read_csv(header), Error);
  std::stringstream row("experiment,instance,quantity,value,bound,flag\nx,y,z,1\n");
  EXPECT_THROW(read_csv(row), Error);
  std::stringstream flag("experiment,instance,quantity,value,bound,flag\nx,y,z,1,,maybe\n");
  EXPECT_THROW(read_csv(flag), Error);
}

TEST(Summary, DeterministicAndCounts) {
  const auto rows = run_content(small());
  const auto a = summarize({{"content.csv", rows}});
  const auto b = summarize({{"content.csv", rows}});
  EXPECT_EQ(a, b);
  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j["rows"].get<std::size_t>(), rows.size());
  EXPECT_EQ(j["fail"].get<std::size_t>(), count_flag(rows, Flag::Fail));
  EXPECT_THROW(summarize({}), Error);
}

TEST(Commands, ContentKeystoneAndFrostmanPass) {
  for (const std::string set : {"full", "dust:1110", "cantor:1101"}) {
    auto cfg = small(6);
    cfg.set = set;
    for (const auto& rows : {run_content(cfg), run_keystone(cfg), run_frostman_audit(cfg)}) {
      EXPECT_FALSE(rows.empty());
      EXPECT_EQ(count_flag(rows, Flag::Fail), 0u) << set;
    }
  }
}

TEST(Commands, RepeatableOutput) {
  auto cfg = small(5);
  cfg.set = "perc:0.8";
  cfg.seed = 4;
  std::stringstream a, b;
  write_csv(a, run_verify_reverse(cfg, FunctionSource::parse("random-lipschitz"), 2));
  write_csv(b, run_verify_reverse(cfg, FunctionSource::parse("random-lipschitz"), 2));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Commands, PackingAuditPasses) {
  auto cfg = small(6);
  cfg.set = "dust:1001";
  cfg.d = 1.0;
  cfg.lambda = 0.5;
  const auto rows = run_packing_audit(cfg);
  EXPECT_GT(count_flag(rows, Flag::Pass), 0u);
  EXPECT_EQ(count_flag(rows, Flag::Fail), 0u);
}

TEST(Commands, RoundtripTraceIsExact) {
  auto cfg = small(5);
  const auto rows = run_roundtrip(cfg, FunctionSource::parse("random-lipschitz"), 2);
  std::size_t seen = 0;
  for (const auto& r : rows)
    if (r.quantity == "trace_error") {
      ++seen;
      EXPECT_EQ(r.value, 0.0);
    }
  EXPECT_EQ(seen, 2u);
  EXPECT_EQ(count_flag(rows, Flag::Fail), 0u);
}

TEST(Commands, RejectInvalidHypotheses) {
  auto cfg = small(5);
  cfg.d = 1.0;
  EXPECT_THROW(run_verify_reverse(cfg, FunctionSource::parse("zero"), 1), Error);
  EXPECT_THROW(run_verify_direct(cfg, FieldSpec::parse("zero"), 1), Error);
}

TEST(PointwiseAudits, ConvergenceAndGradient) {
  auto cfg = small(5);
  const auto inst = checked_instance(cfg, resolve_set(cfg));
  const auto f = leaf_function(FunctionSource::parse("random-lipschitz:1"), inst.set, cfg.Kf);
  const ApproxContext ctx(inst.set, inst.keystone, inst.sequence, f);
  const auto sharp = sharp_field(f, inst.keystone, inst.sequence, 7);
  const auto conv = convergence_audit(ctx, sharp, cfg.K);
  EXPECT_GT(conv.checks, 0u);
  EXPECT_EQ(conv.violations, 0u);
  EXPECT_LE(conv.max_ratio, 1.0);
  const auto grad = gradient_audit(ctx, sharp, 200, 3);
  EXPECT_EQ(grad.points, 200u);
  EXPECT_TRUE(std::isfinite(grad.majorant_constant));
  EXPECT_TRUE(std::isfinite(grad.sharp_constant));
  EXPECT_EQ(grad.infinite, 0u);
}
