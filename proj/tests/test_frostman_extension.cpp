#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "stlab/analysis.hpp"
#include "stlab/content.hpp"
#include "stlab/extension.hpp"
#include "stlab/frostman.hpp"
#include "stlab/keystone.hpp"

using namespace stlab;

namespace {

DyadicSet named(int dim, int K, const std::string& spec, std::uint64_t seed = 0) {
  return generate_set(dim, K, GeneratorSpec::parse(spec), seed);
}

std::vector<double> parity(const DyadicSet& s) {
  std::vector<double> f(s.leaf_count(), 0.0);
  for (std::size_t leaf : s.marked_linear()) f[leaf] = static_cast<double>(leaf % 2);
  return f;
}

std::vector<double> constant(const DyadicSet& s, double v) {
  std::vector<double> f(s.leaf_count(), 0.0);
  for (std::size_t leaf : s.marked_linear()) f[leaf] = v;
  return f;
}

std::vector<double> random_values(const DyadicSet& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> f(s.leaf_count(), 0.0);
  for (std::size_t leaf : s.marked_linear()) f[leaf] = u(rng);
  return f;
}

// Set, thick family and measures kept together for the extension tests.
struct Model {
  DyadicSet s;
  KeystoneIndex ki;
  FrostmanSequence seq;
  Model(DyadicSet set, double d, double frac)
      : s(std::move(set)), ki(keystone(s, d, frac * content_tree(s, d).root())), seq(build_sequence(s, d)) {}
};

Point random_point(std::mt19937_64& rng, int dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Point y{};
  for (int i = 0; i < dim; ++i) y[i] = u(rng);
  return y;
}

}  // namespace

TEST(Frostman, FullLineIsLebesgue) {
  const auto s = named(1, 6, "full");
  const auto seq = build_sequence(s, 1.0);
  EXPECT_EQ(seq.kmax(), 4);
  for (int k = 0; k <= seq.kmax(); ++k)
    for (int j = 0; j <= 6; ++j)
      for (std::int64_t m = 0; m < (std::int64_t{1} << j); ++m)
        EXPECT_DOUBLE_EQ(seq.mass(k, DyadicCube{1, j, Index{m, 0, 0}}), std::ldexp(1.0, -j));
  for (std::size_t leaf = 0; leaf < 64; ++leaf) EXPECT_DOUBLE_EQ(seq.density(2, leaf), 1.0);
}

TEST(Frostman, SingleLeafMass) {
  for (double d : {0.3, 1.0, 1.7}) {
    const auto s = named(2, 4, "single:5,9");
    const auto seq = build_sequence(s, d);
    for (int k = 0; k <= seq.kmax(); ++k) EXPECT_DOUBLE_EQ(seq.total_mass(k), std::exp2(-4 * d));
    const auto audit = audit_sequence(seq, content_tree(s, d), 1);
    EXPECT_NEAR(audit.c2, 1.0, 1e-12);
  }
}

TEST(Frostman, DiagonalDustIsUniform) {
  const auto s = named(2, 5, "dust:1001");
  const auto seq = build_sequence(s, 1.0);
  const double expect = 1.0 / static_cast<double>(s.marked_count());
  for (int k = 0; k <= seq.kmax(); ++k)
    for (std::size_t leaf : s.marked_linear()) EXPECT_DOUBLE_EQ(seq.weights(k)[leaf], expect);
}

TEST(Frostman, AxiomsOnBuiltinSets) {
  for (const std::string spec : {"full", "dust:1110", "cantor:1101", "perc:0.6", "segment:0.1,0.2;0.9,0.7"}) {
    for (double d : {1.0, 1.5}) {
      const auto s = named(2, 6, spec, 3);
      const auto h = content_tree(s, d);
      if (h.root() <= 0.0) continue;
      const auto seq = build_sequence(s, d);
      for (int k = 0; k <= seq.kmax(); ++k)
        for (std::size_t leaf : s.marked_linear()) EXPECT_GT(seq.weights(k)[leaf], 0.0) << spec;
      const auto a = audit_sequence(seq, h, 5);
      EXPECT_LE(a.c1, 1.0 + 1e-12) << spec;
      EXPECT_GE(a.c2, 1.0 - 1e-12) << spec;
      EXPECT_LE(a.c3, kC3Ceiling) << spec;
      EXPECT_LE(a.arbitrary_cube, std::exp2(2 + d) * (1 + 1e-12)) << spec;
      EXPECT_GT(a.sampled_cubes, 0u);
    }
  }
}

TEST(Frostman, FullLineConstantsAreOne) {
  const auto s = named(1, 8, "full");
  const auto a = audit_sequence(build_sequence(s, 1.0), content_tree(s, 1.0), 0);
  EXPECT_NEAR(a.c1, 1.0, 1e-12);
  EXPECT_NEAR(a.c2, 1.0, 1e-12);
  EXPECT_NEAR(a.c3, 1.0, 1e-12);
}

TEST(Frostman, PerturbationIsDetected) {
  const auto s = named(1, 8, "full");
  const auto h = content_tree(s, 1.0);
  auto seq = build_sequence(s, 1.0);
  const double before = audit_sequence(seq, h, 0).c3;
  seq.mutable_weights(3)[17] *= 2.0;
  const auto after = audit_sequence(seq, h, 0);
  EXPECT_GE(after.c3, 2.0 * before - 1e-12);
  EXPECT_GT(after.c1, 1.0);
}

TEST(Frostman, Averages) {
  const auto s = named(1, 6, "full");
  const auto seq = build_sequence(s, 1.0);
  EXPECT_DOUBLE_EQ(seq.average(1, DyadicCube{1, 2, Index{3, 0, 0}}, constant(s, 5.0)), 5.0);
  EXPECT_DOUBLE_EQ(seq.average(0, root_cube(1), parity(s)), 0.5);
  const auto c = named(1, 6, "cantor:1001");
  const auto cs = build_sequence(c, 0.5);
  EXPECT_EQ(cs.average(2, DyadicCube{1, 2, Index{1, 0, 0}}, constant(c, 5.0)), 0.0);
}

TEST(Frostman, LebesgueEmbedding) {
  const auto s = named(2, 6, "perc:0.8", 3);
  const auto seq = build_sequence(s, 1.5);
  const double mass = seq.total_mass(0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = random_values(s, seed);
    for (auto [q, p] : {std::pair{1.2, 1.8}, std::pair{1.5, 3.0}, std::pair{1.1, 1.3}}) {
      const double lhs = lp_norm_m0(f, seq, q);
      const double rhs = std::pow(mass, (p - q) / (p * q)) * lp_norm_m0(f, seq, p);
      EXPECT_LE(lhs, rhs * (1 + 1e-12));
    }
  }
}

TEST(Frostman, TextRoundTrip) {
  const auto s = named(2, 5, "dust:0111");
  const auto seq = build_sequence(s, 1.3);
  std::stringstream buf;
  write_sequence(buf, seq);
  EXPECT_EQ(read_sequence(buf), seq);
  std::stringstream bad("MEAS nonsense\n");
  EXPECT_THROW(read_sequence(bad), Error);
}

TEST(Frostman, RejectsBadArguments) {
  const auto s = named(1, 4, "full");
  EXPECT_THROW(build_sequence(s, 1.5), Error);
  EXPECT_THROW(build_sequence(s, 1.0, 5), Error);
}

TEST(Bump, PlateauSupportAndPartition) {
  EXPECT_DOUBLE_EQ(psi0(0.5), 1.0);
  EXPECT_EQ(psi0(-0.2), 0.0);
  EXPECT_EQ(psi0(1.2), 0.0);
  double sum = 0.0;
  for (int m = -2; m <= 2; ++m) sum += psi0(0.37 - m);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    double total = 0.0;
    for (int m = -5; m <= 5; ++m) total += psi0(t - m);
    EXPECT_NEAR(total, 1.0, 1e-12);
    const double v = psi0(t);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    if (t >= 0.1 && t <= 0.9) EXPECT_EQ(v, 1.0);
    if (t > -0.1 + 1e-3 && t < 1.1 - 1e-3) EXPECT_GT(v, 0.0);
    if (t <= -0.1 || t >= 1.1) EXPECT_EQ(v, 0.0);
  }
  EXPECT_GT(psi0_max_slope(), 5.0);
  EXPECT_NEAR(bump_cdf(0.2), 1.0, 1e-12);
  EXPECT_EQ(bump_cdf(-0.2), 0.0);
}

TEST(Psi, CenterOutsideAndPartition) {
  const Index m{3, 1, 0};
  const DyadicCube q{2, 2, m};
  EXPECT_DOUBLE_EQ(psi(2, 2, m, q.center()), 1.0);
  EXPECT_EQ(psi(2, 2, m, Point{q.center()[0] + 0.6 * q.side() + 1e-9, q.center()[1], 0}), 0.0);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Point y = random_point(rng, 2, -1.0, 2.0);
    const int k = static_cast<int>(rng() % 5);
    double total = 0.0;
    for (std::int64_t a = -(10 << k); a <= (10 << k); ++a)
      for (std::int64_t b = -(10 << k); b <= (10 << k); ++b) {
        if (std::abs(std::ldexp(y[0], k) - static_cast<double>(a)) > 2 ||
            std::abs(std::ldexp(y[1], k) - static_cast<double>(b)) > 2)
          continue;
        total += psi(2, k, Index{a, b, 0}, y);
      }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(LocalAverage, Examples) {
  const Model full(named(1, 6, "full"), 1.0, 0.5);
  const ApproxContext five(full.s, full.ki, full.seq, constant(full.s, 5.0));
  for (int k = 0; k <= full.seq.kmax(); ++k)
    for (std::int64_t m = -1; m <= (std::int64_t{1} << k); ++m) {
      if (five.neighbor_count(k, Index{m, 0, 0}) > 0) EXPECT_DOUBLE_EQ(five.local_average(k, Index{m, 0, 0}), 5.0);
    }
  EXPECT_EQ(five.neighbor_count(1, Index{3, 0, 0}), 0);
  EXPECT_EQ(five.local_average(1, Index{3, 0, 0}), 0.0);
  const ApproxContext par(full.s, full.ki, full.seq, parity(full.s));
  EXPECT_EQ(par.neighbor_count(1, Index{0, 0, 0}), 2);
  EXPECT_DOUBLE_EQ(par.local_average(1, Index{0, 0, 0}), 0.5);
}

TEST(Approximation, ConstantAndFarField) {
  const Model full(named(2, 5, "full"), 1.0, 0.5);
  const ApproxContext one(full.s, full.ki, full.seq, constant(full.s, 1.0));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 30; ++i) {
    const Point y = random_point(rng, 2, 0.0, 1.0);
    for (double v : one.fk_all(y, one.kmax())) EXPECT_NEAR(v, 1.0, 1e-12);
  }
  EXPECT_EQ(one.fk(one.kmax(), Point{10.0, 10.0, 0}), 0.0);
  EXPECT_EQ(one.fk(0, Point{-7.0, 0.5, 0}), 0.0);
}

TEST(Approximation, RecursionMatchesExplicitFormula) {
  const Model st(named(2, 6, "cantor:1101"), 1.5, 0.5);
  const ApproxContext ctx(st.s, st.ki, st.seq, random_values(st.s, 3));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Point y = random_point(rng, 2, -1.0, 2.0);
    const int k = static_cast<int>(rng() % (ctx.kmax() + 1));
    const int from = static_cast<int>(rng() % (k + 1));
    EXPECT_NEAR(ctx.fk(k, y), ctx.fk_explicit(k, y, from), 1e-12);
  }
}

TEST(Approximation, PartitionIdentityAndNestedSums) {
  const Model st(named(2, 6, "dust:1110"), 1.5, 0.5);
  const ApproxContext ctx(st.s, st.ki, st.seq, random_values(st.s, 5));
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const Point y = random_point(rng, 2, -0.8, 1.8);
    std::vector<int> levels;
    for (int k = 0; k <= ctx.kmax(); ++k)
      if (rng() % 2) levels.push_back(k);
    if (levels.empty()) levels.push_back(0);
    EXPECT_NEAR(partition_identity_residual(ctx, levels, y), 0.0, 1e-12);
    for (int k = 0; k <= ctx.kmax(); ++k) {
      double in = 0.0, out = 0.0;
      ctx.psi_split(k, y, in, out);
      EXPECT_GE(in, -1e-15);
      EXPECT_LE(in, 1.0 + 1e-12);
      EXPECT_NEAR(in + out, 1.0, 1e-12);
    }
  }
}

TEST(Supporting, Examples) {
  const Model full(named(2, 6, "full"), 1.0, 0.5);
  const ApproxContext ctx(full.s, full.ki, full.seq, constant(full.s, 1.0));
  const auto far = supporting(ctx, Point{2.0, 0.5, 0});
  EXPECT_TRUE(far.lower.empty());
  const auto center = supporting(ctx, Point{0.5, 0.5, 0});
  std::vector<int> all(ctx.kmax() + 1);
  for (int k = 0; k <= ctx.kmax(); ++k) all[k] = k;
  EXPECT_EQ(center.lower, all);
  EXPECT_TRUE(center.lower_truncated);

  const Model st(named(2, 6, "cantor:1101"), 1.5, 0.5);
  const ApproxContext cc(st.s, st.ki, st.seq, random_values(st.s, 1));
  const auto dec = canonical_decomposition(st.ki, st.s);
  const auto ess = essential_cells(st.ki, dec, st.s);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Point y = random_point(rng, 2, -1.1, 2.1);
    bool on_ess = false;
    for (const auto& m : ess) {
      const DyadicCube leaf{2, 6, m};
      bool in = true;
      for (int a = 0; a < 2; ++a) in = in && y[a] >= leaf.center()[a] - leaf.side() && y[a] <= leaf.center()[a] + leaf.side();
      on_ess = on_ess || in;
    }
    if (on_ess) continue;
    const auto sup = supporting(cc, y);
    ASSERT_FALSE(sup.upper.empty());
    EXPECT_EQ(sup.upper.front(), 0);
    // Beyond the deepest upper level the approximations stop changing.
    if (!sup.upper_truncated) {
      const int kbar = sup.upper.back();
      const double ref = cc.fk(kbar, y);
      for (int k = kbar + 1; k <= cc.kmax(); ++k) EXPECT_NEAR(cc.fk(k, y), ref, 1e-12);
    }
  }
}

TEST(Extend, ConstantsAndSupport) {
  const Model st(named(2, 5, "dust:1001"), 1.0, 0.5);
  const ApproxContext ctx(st.s, st.ki, st.seq, constant(st.s, 3.0));
  const auto F = extend(ctx, 6, 5);
  for (std::size_t lin = 0; lin < F.size(); ++lin) {
    const Point x = F.center(lin);
    bool outside4 = false;
    for (int i = 0; i < 2; ++i) outside4 = outside4 || x[i] < -1.5 || x[i] > 2.5;
    if (outside4) EXPECT_EQ(F[lin], 0.0);
  }
  for (std::size_t leaf : st.s.marked_linear()) {
    const DyadicCube q = cube_at(2, 5, leaf);
    EXPECT_DOUBLE_EQ(F.value_at(q.center()), 3.0);
  }
  // Near the set the recursion reproduces the constant.
  EXPECT_NEAR(F.value_at(Point{0.52, 0.49, 0}), 3.0, 1e-12);
}

TEST(Extend, Linearity) {
  const Model st(named(2, 5, "cantor:1011"), 1.5, 0.5);
  const auto f = random_values(st.s, 1), g = random_values(st.s, 2);
  std::vector<double> h(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) h[i] = 2.0 * f[i] - 0.5 * g[i];
  const auto Ef = extend(ApproxContext(st.s, st.ki, st.seq, f), 6, 4);
  const auto Eg = extend(ApproxContext(st.s, st.ki, st.seq, g), 6, 4);
  const auto Eh = extend(ApproxContext(st.s, st.ki, st.seq, h), 6, 4);
  for (std::size_t i = 0; i < Eh.size(); ++i) EXPECT_NEAR(Eh[i], 2.0 * Ef[i] - 0.5 * Eg[i], 1e-12);
}

TEST(GradientMajorant, Examples) {
  const Model full(named(1, 6, "full"), 1.0, 0.5);
  const ApproxContext par(full.s, full.ki, full.seq, parity(full.s));
  EXPECT_DOUBLE_EQ(gradient_majorant(par, 0, 0, 0.5, Point{0.5, 0, 0}), 0.5);
  const ApproxContext c4(full.s, full.ki, full.seq, constant(full.s, 4.0));
  EXPECT_EQ(gradient_majorant(c4, 3, 1, 4.0, Point{0.3, 0, 0}), 0.0);

  const Model st(named(2, 6, "perc:0.7"), 1.5, 0.5);
  const auto f = random_values(st.s, 8);
  auto f2 = f;
  for (auto& v : f2) v *= 2.0;
  const ApproxContext a(st.s, st.ki, st.seq, f), b(st.s, st.ki, st.seq, f2);
  std::mt19937_64 rng(10);
  for (int i = 0; i < 30; ++i) {
    const Point y = random_point(rng, 2, 0.0, 1.0);
    const auto sup = supporting(a, y);
    if (sup.lower.empty()) continue;
    const int kstar = sup.lower.front();
    const int k = a.kmax();
    EXPECT_NEAR(gradient_majorant(b, k, kstar, 0.6, y), 2.0 * gradient_majorant(a, k, kstar, 0.3, y), 1e-12);
  }
}

TEST(ApproxContext, RejectsMismatches) {
  const Model st(named(1, 5, "full"), 1.0, 0.5);
  EXPECT_THROW(ApproxContext(st.s, st.ki, st.seq, std::vector<double>(3, 0.0)), Error);
  const ApproxContext ctx(st.s, st.ki, st.seq, constant(st.s, 1.0));
  EXPECT_THROW(ctx.fk(ctx.kmax() + 1, Point{}), Error);
  EXPECT_THROW(partition_identity_residual(ctx, {2, 1}, Point{}), Error);
}
