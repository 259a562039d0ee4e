#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracle.hpp"
#include "stlab/audits.hpp"
#include "stlab/content.hpp"
#include "stlab/keystone.hpp"

using namespace stlab;

namespace {

DyadicSet random_set(int dim, int K, std::uint64_t seed, double p = 0.4) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::uint8_t> marks(level_size(dim, K));
  for (auto& m : marks) m = coin(rng);
  if (std::none_of(marks.begin(), marks.end(), [](auto m) { return m != 0; })) marks[seed % marks.size()] = 1;
  return DyadicSet(dim, K, std::move(marks), "random");
}

DyadicSet named(int dim, int K, const std::string& spec) {
  return generate_set(dim, K, GeneratorSpec::parse(spec), 0);
}

std::vector<DyadicCube> all_cubes(int dim, int K) {
  std::vector<DyadicCube> out;
  for (int k = 0; k <= K; ++k)
    for (std::size_t lin = 0; lin < level_size(dim, k); ++lin) out.push_back(cube_at(dim, k, lin));
  return out;
}

bool inside(const DyadicCube& q, const LatticeBox& box) { return box.contains(q); }

// Content of S inside the interval (level, index) by exhaustive partitions.
double oracle_content(const DyadicSet& s, int level, std::int64_t index, double d) {
  const auto parts = oracle::all_partitions(level, s.resolution());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : parts)
    best = std::min(best, oracle::partition_cost(*p, level, index, s.resolution(), s.marks(), d));
  return best;
}

// Thick cubes Qbar no larger than Q with Q inside cQbar and no thick strict
// ancestor of Q strictly between them in size.
std::vector<DyadicCube> oracle_covering(const KeystoneIndex& ki, const DyadicCube& q, int c) {
  std::vector<DyadicCube> out;
  for (const auto& b : all_cubes(ki.dim(), q.level)) {
    if (!ki.is_thick(b) || !inside(q, dilate(b, c))) continue;
    bool blocked = false;
    for (int j = b.level + 1; j < q.level; ++j) blocked = blocked || ki.is_thick(ancestor(q, j));
    if (!blocked) out.push_back(b);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(ContentOracle, MatchesExhaustiveCoversOnEveryCube) {
  for (int K = 1; K <= 4; ++K)
    for (std::uint64_t seed = 0; seed < 12; ++seed)
      for (double d : {0.25, 0.5, 0.7, 1.0}) {
        const auto s = random_set(1, K, seed * 31 + K, 0.5);
        const auto h = content_tree(s, d);
        for (int k = 0; k <= K; ++k)
          for (std::int64_t m = 0; m < (std::int64_t{1} << k); ++m)
            EXPECT_EQ(h.value(DyadicCube{1, k, Index{m, 0, 0}}), oracle_content(s, k, m, d))
                << "K=" << K << " seed=" << seed << " d=" << d << " k=" << k << " m=" << m;
      }
}

TEST(Content, FullSetHasUnitRoot) {
  for (int dim = 1; dim <= 2; ++dim)
    for (double d : {0.3, 1.0, static_cast<double>(dim)})
      if (d <= dim) EXPECT_DOUBLE_EQ(content_tree(named(dim, 4, "full"), d).root(), 1.0);
}

TEST(Content, HalfCantorAtHalfDimension) {
  for (int K : {2, 4, 6, 8}) EXPECT_DOUBLE_EQ(content_tree(named(1, K, "cantor:1001"), 0.5).root(), 1.0);
}

TEST(Content, EmptySubtreeIsZero) {
  const auto h = content_tree(named(1, 4, "cantor:1001"), 0.5);
  EXPECT_EQ(h.value(DyadicCube{1, 2, Index{1, 0, 0}}), 0.0);
  EXPECT_EQ(h.value(DyadicCube{1, 2, Index{2, 0, 0}}), 0.0);
}

TEST(Content, MonotoneInCubeAndExponent) {
  const auto s = random_set(2, 4, 3);
  const auto lo = content_tree(s, 0.6);
  const auto hi = content_tree(s, 1.4);
  for (const auto& q : all_cubes(2, 4)) {
    EXPECT_GE(lo.value(q) + 1e-15, hi.value(q));
    if (q.level > 0) EXPECT_LE(lo.value(q), lo.value(parent(q)));
  }
}

TEST(Content, RejectsExponentOutOfRange) {
  EXPECT_THROW(content_tree(named(1, 3, "full"), 1.5), Error);
  EXPECT_THROW(content_tree(named(1, 3, "full"), -0.1), Error);
}

TEST(Thick, Examples) {
  const auto full = content_tree(named(2, 3, "full"), 1.2);
  for (const auto& q : all_cubes(2, 3)) EXPECT_TRUE(is_thick(full, q, 1.0));
  const auto cantor = content_tree(named(1, 4, "cantor:1001"), 0.5);
  EXPECT_FALSE(is_thick(cantor, DyadicCube{1, 2, Index{1, 0, 0}}, 0.1));
  EXPECT_TRUE(is_thick(cantor, root_cube(1), 0.9));
}

TEST(Thick, TiesResolveTowardThick) {
  EXPECT_TRUE(is_thick_value(0.5 * (1 - 1e-14), 1.0, 0.5));
  EXPECT_FALSE(is_thick_value(0.5 * (1 - 1e-9), 1.0, 0.5));
  EXPECT_FALSE(is_thick_value(0.0, 1.0, 1e-300));
}

TEST(Keystone, FullLineIsAllThick) {
  const auto ki = keystone(named(1, 2, "full"), 1.0, 0.5);
  EXPECT_EQ(ki.df_size(), 7u);
}

TEST(Keystone, RootAlwaysThick) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_set(2, 4, seed);
    const double root = content_tree(s, 1.0).root();
    const auto ki = keystone(s, 1.0, 0.99 * root);
    EXPECT_TRUE(ki.is_thick(root_cube(2)));
  }
}

TEST(Keystone, RejectsLambdaAboveContent) {
  const auto s = named(1, 3, "single:2");
  EXPECT_THROW(keystone(s, 0.5, 0.9), Error);
  EXPECT_THROW(keystone(s, 0.5, 0.0), Error);
}

TEST(Keystone, SingleLeafChainMatchesBruteForce) {
  const auto s = named(1, 3, "single:5");
  const KeystoneIndex ki(content_tree(s, 0.5), 0.9);
  std::vector<DyadicCube> expect;
  for (const auto& q : all_cubes(1, 3)) {
    const double h = oracle_content(s, q.level, q.index[0], 0.5);
    if (h > 0 && h >= 0.9 * std::pow(q.side(), 0.5)) expect.push_back(q);
  }
  auto got = ki.df();
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, expect);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0], (DyadicCube{1, 3, Index{5, 0, 0}}));
}

TEST(Keystone, TildeAndAncestors) {
  const auto s = random_set(2, 4, 11);
  const auto ki = keystone(s, 1.0, 0.5 * content_tree(s, 1.0).root());
  for (const auto& q : all_cubes(2, 4)) {
    bool any = false;
    for (const auto& nb : neighbors(q)) any = any || (in_unit_cube(nb) && ki.is_thick(nb));
    EXPECT_EQ(ki.in_tilde(q), any);
    int expect = -1;
    for (int j = q.level - 1; j >= 0 && expect < 0; --j)
      if (ki.is_thick(ancestor(q, j))) expect = j;
    EXPECT_EQ(ki.nearest_thick_ancestor_level(q), expect);
  }
}

TEST(Decomposition, FullLineGenerations) {
  const auto s = named(1, 2, "full");
  const auto ki = keystone(s, 1.0, 0.5);
  const auto dec = canonical_decomposition(ki, s);
  ASSERT_EQ(dec.generations.size(), 3u);
  EXPECT_EQ(dec.generations[0].size(), 1u);
  EXPECT_EQ(dec.generations[1].size(), 2u);
  EXPECT_EQ(dec.generations[2].size(), 4u);
}

TEST(Decomposition, StructuralProperties) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto s = random_set(2, 5, seed, 0.55);
    const double d = 0.8 + 0.1 * static_cast<double>(seed % 5);
    const auto ki = keystone(s, d, 0.6 * content_tree(s, d).root());
    const auto dec = canonical_decomposition(ki, s);
    ASSERT_FALSE(dec.generations.empty());
    EXPECT_EQ(dec.generations[0], std::vector<DyadicCube>{root_cube(2)});
    EXPECT_EQ(dec.defect.size(), dec.generations.size());
    for (std::size_t j = 0; j < dec.generations.size(); ++j) {
      const auto& gen = dec.generations[j];
      for (std::size_t a = 0; a < gen.size(); ++a) {
        EXPECT_TRUE(ki.is_thick(gen[a]));
        for (std::size_t b = a + 1; b < gen.size(); ++b)
          EXPECT_FALSE(is_subcube(gen[a], gen[b]) || is_subcube(gen[b], gen[a]));
      }
      if (j == 0) continue;
      for (const auto& q : gen) {
        const auto& prev = dec.generations[j - 1];
        const auto host = std::find_if(prev.begin(), prev.end(), [&](const DyadicCube& p) {
          return p.level < q.level && is_subcube(q, p);
        });
        ASSERT_NE(host, prev.end());
        for (int k = host->level + 1; k < q.level; ++k) EXPECT_FALSE(ki.is_thick(ancestor(q, k)));
      }
    }
  }
}

TEST(Essential, FullSetAndSubset) {
  const auto full = named(2, 4, "full");
  const auto kf = keystone(full, 1.0, 0.5);
  EXPECT_EQ(essential_cells(kf, canonical_decomposition(kf, full), full).size(), 256u);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto s = random_set(2, 5, seed, 0.6);
    const auto ki = keystone(s, 1.0, 0.5 * content_tree(s, 1.0).root());
    const auto dec = canonical_decomposition(ki, s);
    for (const auto& m : essential_cells(ki, dec, s)) EXPECT_TRUE(s.is_marked(m));
    for (std::size_t j = 1; j < dec.defect.size(); ++j) EXPECT_GE(dec.defect[j] + 1e-15, dec.defect[j - 1]);
  }
}

TEST(Covering, FullSetUnitFactor) {
  const auto ki = keystone(named(2, 3, "full"), 1.0, 0.5);
  const DyadicCube q{2, 2, Index{1, 2, 0}};
  EXPECT_EQ(covering_cubes(ki, q, 1), (std::vector<DyadicCube>{parent(q), q}));
  EXPECT_EQ(covering_cubes(ki, root_cube(2), 1), std::vector<DyadicCube>{root_cube(2)});
  EXPECT_EQ(covering_cubes(ki, q, 1, true), std::vector<DyadicCube>{parent(q)});
  EXPECT_EQ(select_covering(covering_cubes(ki, q, 1)), q);
}

TEST(Covering, MatchesDefinitionByEnumeration) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto s = random_set(2, 4, seed + 100, 0.35);
    const auto ki = keystone(s, 1.2, 0.7 * content_tree(s, 1.2).root());
    for (int c : {1, 3, 7})
      for (const auto& q : all_cubes(2, 4)) {
        const auto got = covering_cubes(ki, q, c);
        EXPECT_EQ(got, oracle_covering(ki, q, c));
        std::vector<std::size_t> per_level(5, 0);
        for (const auto& b : got) ++per_level[b.level];
        for (auto count : per_level) EXPECT_LE(static_cast<std::int64_t>(count), multiplicity_bound(2, c));
      }
  }
}

TEST(Covering, NonemptyUnderLambdaBelowContent) {
  const auto s = random_set(2, 5, 42, 0.3);
  const auto ki = keystone(s, 1.0, 0.8 * content_tree(s, 1.0).root());
  for (const auto& q : all_cubes(2, 5)) EXPECT_FALSE(covering_cubes(ki, q, 1).empty());
}

TEST(Select, DeterministicAndSingleton) {
  const DyadicCube a{1, 2, Index{1, 0, 0}}, b{1, 2, Index{3, 0, 0}}, c{1, 1, Index{0, 0, 0}};
  EXPECT_EQ(select_covering({a}), a);
  EXPECT_EQ(select_covering({c, b, a}), a);
  EXPECT_EQ(select_covering({b, a, c}), select_covering({c, b, a}));
  EXPECT_THROW(select_covering({}), Error);
}

TEST(Shadow, FullSetRoot) {
  const auto ki = keystone(named(2, 3, "full"), 1.0, 0.5);
  const auto sh = shadow(ki, root_cube(2), 1);
  EXPECT_EQ(sh, children(root_cube(2)));
  EXPECT_TRUE(shadow(ki, DyadicCube{2, 3, Index{1, 1, 0}}, 1).empty());
}

TEST(Shadow, MatchesDefinitionAndMap) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_set(2, 4, seed + 7, 0.5);
    const auto ki = keystone(s, 1.0, 0.6 * content_tree(s, 1.0).root());
    for (int c : {1, 7}) {
      const auto map = shadow_map(ki, c);
      for (const auto& qbar : ki.df()) {
        std::vector<DyadicCube> expect;
        for (const auto& q : ki.df()) {
          if (q.level <= qbar.level) continue;
          const auto cov = covering_cubes(ki, q, c);
          if (std::find(cov.begin(), cov.end(), qbar) != cov.end()) expect.push_back(q);
        }
        std::sort(expect.begin(), expect.end());
        auto got = shadow(ki, qbar, c);
        std::sort(got.begin(), got.end());
        EXPECT_EQ(got, expect);
        const auto it = map.find(cube_key(qbar));
        EXPECT_EQ(it == map.end() ? std::vector<DyadicCube>{} : it->second, expect);
        for (std::size_t a = 0; a < got.size(); ++a)
          for (std::size_t b = a + 1; b < got.size(); ++b)
            EXPECT_FALSE(is_subcube(got[a], got[b]) || is_subcube(got[b], got[a]));
      }
    }
  }
}

TEST(Shadow, RootShadowNonemptyAndRejectsThin) {
  const auto s = random_set(2, 5, 5, 0.5);
  const auto ki = keystone(s, 1.0, 0.5 * content_tree(s, 1.0).root());
  EXPECT_FALSE(shadow(ki, root_cube(2), 7).empty());
  const auto thin = named(2, 3, "single:0,0");
  const KeystoneIndex kt(content_tree(thin, 1.0), 0.5 * content_tree(thin, 1.0).root());
  EXPECT_THROW(shadow(kt, DyadicCube{2, 1, Index{1, 1, 0}}, 1), Error);
}

TEST(Iceberg, EmptyShadowAndFullSet) {
  EXPECT_TRUE(iceberg(root_cube(1), {}).cubes.empty());
  const auto ki = keystone(named(1, 2, "full"), 1.0, 0.5);
  const auto ice = iceberg(root_cube(1), shadow(ki, root_cube(1), 1));
  // The shadow is both halves; the only cube between them and the apex is the apex.
  EXPECT_EQ(ice.cubes, std::vector<DyadicCube>{root_cube(1)});
  EXPECT_EQ(ice.depth, 1);
  EXPECT_DOUBLE_EQ(ice.min_shadow_side, 0.5);
}

TEST(Iceberg, LayersUpwardClosureAndThinness) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto s = random_set(2, 5, seed + 20, 0.45);
    const auto ki = keystone(s, 1.0, 0.5 * content_tree(s, 1.0).root());
    for (const auto& qbar : ki.df()) {
      const auto ice = iceberg(qbar, shadow(ki, qbar, 7));
      std::size_t layered = 0;
      for (std::size_t j = 0; j < ice.layers.size(); ++j) {
        layered += ice.layers[j].size();
        for (const auto& q : ice.layers[j]) EXPECT_EQ(q.level, qbar.level + static_cast<int>(j));
      }
      EXPECT_EQ(layered, ice.cubes.size());
      for (const auto& q : ice.cubes) {
        if (q.level > qbar.level) {
          EXPECT_FALSE(ki.is_thick(q));
          EXPECT_TRUE(std::binary_search(ice.cubes.begin(), ice.cubes.end(), parent(q)));
        }
      }
    }
  }
}

TEST(Tower, Examples) {
  const auto ki = keystone(named(1, 5, "full"), 1.0, 0.5);
  const auto chain = tower(ki, Point{1.0 / 3.0, 0, 0}, 1);
  ASSERT_EQ(chain.size(), 6u);
  for (std::size_t j = 1; j < chain.size(); ++j) EXPECT_TRUE(is_subcube(chain[j], chain[j - 1]));
  EXPECT_TRUE(tower(ki, Point{2.5, 0, 0}, 1).empty());
  EXPECT_TRUE(tower(ki, Point{-1.5, 0, 0}, 3).empty());
  const auto leaf = DyadicCube{1, 5, Index{9, 0, 0}};
  for (const auto& q : tower(ki, leaf, 3)) EXPECT_TRUE(dilate(q, 3).contains(leaf));
}

TEST(Tower, EssentialCellsHaveFullDepth) {
  const auto s = named(2, 5, "dust:1001");
  const auto ki = keystone(s, 1.0, 0.5);
  const auto dec = canonical_decomposition(ki, s);
  for (const auto& m : essential_cells(ki, dec, s)) {
    const DyadicCube leaf{2, 5, m};
    std::vector<bool> levels(6, false);
    for (const auto& q : tower(ki, leaf.center(), 1)) levels[q.level] = true;
    EXPECT_TRUE(std::all_of(levels.begin(), levels.end(), [](bool b) { return b; }));
  }
}

TEST(Cavity, FullSetIsEmptyAndEmptyRegionIsWhole) {
  const auto ki = keystone(named(2, 5, "full"), 1.0, 0.5);
  const DyadicCube q{2, 1, Index{0, 1, 0}};
  for (int kappa = 1; kappa <= 3; ++kappa) {
    EXPECT_EQ(cavity(ki, q, 1, kappa).volume(), 0.0);
    // Only the part of 3Q outside the unit square survives, less the
    // slivers of 3Q' reaching past its boundary.
    const auto cav = cavity(ki, q, 3, kappa);
    EXPECT_LT(cav.volume(), 1.5 * 1.5 - 1.0);
    for (const auto& m : cav.cells) EXPECT_FALSE(in_unit_cube(DyadicCube{2, 5, m}));
  }
  const auto s = named(2, 5, "single:0,0");
  const KeystoneIndex kt(content_tree(s, 1.0), 0.5 * content_tree(s, 1.0).root());
  const DyadicCube far{2, 2, Index{3, 3, 0}};
  const auto cav = cavity(kt, far, 1, 2);
  EXPECT_EQ(cav.cells.size(), 64u);
  EXPECT_DOUBLE_EQ(cav.volume(), far.side() * far.side());
  EXPECT_THROW(cavity(kt, far, 1, 4), Error);
  EXPECT_THROW(cavity(kt, far, 2, 1), Error);
}

TEST(Cavity, OverlapWithinBoundAndPositiveVolume) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto s = random_set(2, 6, seed + 50, 0.5);
    const auto ki = keystone(s, 1.5, 0.5 * content_tree(s, 1.5).root());
    for (int c : {1, 3, 7}) {
      const auto audit = cavity_audit(ki, c, 3);
      EXPECT_LE(audit.max_overlap, audit.bound);
      EXPECT_EQ(audit.bound, 2 * 3 * multiplicity_bound(2, c));
      if (audit.thin_cubes > 0) EXPECT_GT(audit.min_volume_ratio, 0.0);
    }
  }
}

TEST(Porous, Examples) {
  const auto full = keystone(named(2, 4, "full"), 1.0, 0.5);
  EXPECT_TRUE(porous_family(full, 7).empty());
  const auto s = named(2, 4, "single:3,9");
  const KeystoneIndex ki(content_tree(s, 0.5), 0.5 * content_tree(s, 0.5).root());
  const auto p = porous_family(ki, 7);
  EXPECT_NE(std::find(p.begin(), p.end(), root_cube(2)), p.end());
}

TEST(Porous, MatchesDefinitionByEnumeration) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = random_set(2, 4, seed + 70, 0.5);
    const auto ki = keystone(s, 1.0, 0.7 * content_tree(s, 1.0).root());
    const auto cubes = all_cubes(2, 4);
    for (int c : {1, 3, 7}) {
      std::vector<DyadicCube> expect;
      for (const auto& q : ki.df()) {
        const auto box = dilate(q, c);
        const bool hit = std::any_of(cubes.begin(), cubes.end(), [&](const DyadicCube& t) {
          return t.level <= q.level + 2 && !ki.is_thick(t) && box.contains(t);
        });
        if (hit) expect.push_back(q);
      }
      auto got = porous_family(ki, c);
      std::sort(got.begin(), got.end());
      std::sort(expect.begin(), expect.end());
      EXPECT_EQ(got, expect) << "c=" << c;
      for (const auto& q : got) EXPECT_TRUE(ki.is_thick(q));
    }
  }
}

TEST(Packing, CarlesonBoundsHold) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto s = random_set(2, 6, seed + 90, 0.5);
    const double d = 1.0;
    const auto ki = keystone(s, d, 0.5 * content_tree(s, d).root());
    for (int c : {1, 7}) {
      const auto audit = carleson_audit(ki, c, {d, 1.5, 2.0});
      EXPECT_GT(audit.local_checks, 0u);
      EXPECT_EQ(audit.violations, 0u);
      EXPECT_LE(audit.max_local_ratio, 1.0);
      EXPECT_LE(audit.max_global_ratio, 1.0);
      EXPECT_EQ(audit.thick_iceberg_cubes, 0u);
      EXPECT_EQ(audit.overlapping_shadows, 0u);
      EXPECT_EQ(audit.apex_layer_mismatches, 0u);
    }
  }
}

TEST(Packing, ComparableFamiliesHold) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto s = random_set(2, 6, seed + 110, 0.5);
    const double d = 1.0;
    const auto ki = keystone(s, d, 0.5 * content_tree(s, d).root());
    const auto dec = canonical_decomposition(ki, s);
    const auto audit = family_packing_audit(ki, dec, ki, seed, 4);
    EXPECT_GT(audit.families, 0u);
    EXPECT_EQ(audit.violations, 0u);
    EXPECT_LE(audit.max_ratio, 1.0);
  }
}
