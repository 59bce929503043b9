#include "dynrisk/indices.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dynrisk/generators.hpp"
#include "dynrisk/json_io.hpp"
#include "dynrisk/oracle.hpp"
#include "test_support.hpp"

namespace dynrisk {
namespace {

using testing::binary;
using testing::corpus;
using testing::fixture;
using testing::two_leaf;

AdaptedProcess terminal(const ScenarioTree& tree, StateVector x) {
  return AdaptedProcess::terminal(tree, x);
}

CounterexampleFixture load_counterexample() {
  return io::parse_fixture(io::load_json(fixture("draroc_d7_counterexample.json")));
}

TEST(Dglr, TwoLeafHandValue) {
  const auto tree = two_leaf();
  const auto d = terminal(tree, {3.0, -1.0});
  EXPECT_DOUBLE_EQ(dglr(tree, d, 0)[0].value(), 2.0);
  EXPECT_TRUE(level_close(oracle::brute_dglr_at(tree, d, tree.root()), Level::finite(2.0), 1e-15));
}

TEST(Dglr, NormalizedOnSinglePayments) {
  for (const auto& tree : corpus(10, 81)) {
    for (int s = 0; s <= tree.horizon(); ++s) {
      for (int t = 0; t <= s; ++t) {
        for (const auto& l : dglr(tree, AdaptedProcess::single_payment(tree, s, 0.5), t)) EXPECT_TRUE(l.is_infinite());
        for (const auto& l : dglr(tree, AdaptedProcess::single_payment(tree, s, -0.5), t)) EXPECT_EQ(l, Level::zero());
      }
    }
  }
}

TEST(Dglr, ScaleInvariance) {
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(30, 82)) {
    auto rng = seeded_rng(83, stream++);
    const auto d = random_process(tree, rng);
    for (int t = 0; t <= tree.horizon(); ++t) {
      const auto base = dglr(tree, d, t);
      for (double lambda : {0.5, 2.0, 10.0}) {
        const auto scaled = dglr(tree, d.scaled(lambda), t);
        for (std::size_t k = 0; k < base.size(); ++k) {
          EXPECT_TRUE(level_close(scaled[k], base[k], 1e-14)) << base[k].to_string() << " vs " << scaled[k].to_string();
        }
      }
    }
  }
}

TEST(Dglr, AxiomsAndVariantsPass) {
  std::uint64_t seed = 0;
  for (const auto& tree : corpus(4, 84)) {
    const auto axioms = check_axioms_D(tree, dglr_index(), 80, ++seed);
    for (const auto& r : axioms.results) EXPECT_TRUE(r.passed) << r.name << ": " << r.witness;
    EXPECT_GE(axioms.at("D7").effective_ratio(), 0.3);
    const auto variants = check_D_variants(tree, dglr_index(), 80, seed);
    for (const auto& r : variants.results) EXPECT_TRUE(r.passed) << r.name << ": " << r.witness;
  }
}

TEST(Dglr, QuasiConcavitySpotCheck) {
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(20, 85)) {
    auto rng = seeded_rng(86, stream++);
    const auto d1 = random_process(tree, rng, -0.5, 1.0);
    const auto d2 = random_process(tree, rng, -0.5, 1.0);
    const auto a1 = dglr(tree, d1, 0)[0];
    const auto a2 = dglr(tree, d2, 0)[0];
    const Level x = std::min(a1, a2);
    if (x.is_infinite() || x == Level::zero()) continue;
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto mix = d1.scaled(lambda) + d2.scaled(1.0 - lambda);
      EXPECT_GE(dglr(tree, mix, 0)[0].value_or(kLevelCap), x.value() - 1e-6);
    }
  }
}

TEST(Draroc, HandValuesAndNormalization) {
  const auto tree = two_leaf();
  EXPECT_DOUBLE_EQ(draroc(tree, terminal(tree, {3.0, -1.0}), 0)[0].value(), 1.0);
  EXPECT_TRUE(draroc(tree, terminal(tree, {0.5, 2.0}), 0)[0].is_infinite());
  EXPECT_EQ(draroc(tree, terminal(tree, {-0.5, 0.2}), 0)[0], Level::zero());
  EXPECT_EQ(draroc_index().name(), "draroc");
}

TEST(LimitRatio, UpperHandValues) {
  const auto tree = two_leaf();
  const auto at_root = [&](StateVector x, LimitDirection dir, LevelMap h = {}) {
    return limit_ratio(tree, terminal(tree, std::move(x)), 0, dir, std::move(h))[0];
  };
  EXPECT_EQ(at_root({1.0, -1.0}, LimitDirection::upper), Level::zero());
  EXPECT_NEAR(at_root({2.0, -1.0}, LimitDirection::upper).value(), 1.0 / 3.0, 1e-7);
  EXPECT_NEAR(at_root({2.0, -1.0}, LimitDirection::upper, [](double x) { return 2.0 * x; }).value(),
              1.0 / 6.0, 1e-7);
  EXPECT_NEAR(at_root({2.0, -1.0}, LimitDirection::lower).value(), 0.5, 1e-7);
}

TEST(LimitRatio, NormalizedOnSinglePayments) {
  const auto tree = binary(2);
  for (auto dir : {LimitDirection::upper, LimitDirection::lower}) {
    for (int s = 0; s <= 2; ++s) {
      EXPECT_TRUE(limit_ratio(tree, AdaptedProcess::single_payment(tree, s, 1.0), 0, dir)[0].is_infinite());
      EXPECT_EQ(limit_ratio(tree, AdaptedProcess::single_payment(tree, s, -1.0), 0, dir)[0], Level::zero());
    }
  }
}

TEST(LimitRatio, ZeroProcessIsInfinite) {
  const auto tree = binary(2);
  for (const auto& l : limit_ratio(tree, AdaptedProcess::zeros(tree), 1, LimitDirection::upper)) {
    EXPECT_TRUE(l.is_infinite());
  }
}

TEST(LimitRatio, LevelReparametrization) {
  std::size_t interior = 0;
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(20, 87, 2, 2, 8)) {
    auto rng = seeded_rng(88, stream++);
    const auto d = random_process(tree, rng, -1.0, 1.5);
    const auto a = limit_ratio(tree, d, 0, LimitDirection::upper)[0];
    const auto b = limit_ratio(tree, d, 0, LimitDirection::upper, [](double x) { return 2.0 * x; })[0];
    if (a.is_infinite() || a == Level::zero()) continue;
    ++interior;
    EXPECT_NEAR(b.value(), a.value() / 2.0, 1e-7 * (1.0 + a.value()));
  }
  EXPECT_GT(interior, 3u);
}

TEST(LimitRatio, UpperLimitPassesAxioms) {
  const auto tree = binary(2);
  const auto index = limit_ratio_index(LimitDirection::upper);
  EXPECT_EQ(index.name(), "upper-limit");
  const auto axioms = check_axioms_D(tree, index, 25, 3);
  for (const auto& r : axioms.results) EXPECT_TRUE(r.passed) << r.name << ": " << r.witness;
}

TEST(FamilyIndex, MonotoneUnderDecreasingTails) {
  const IndexFamilyBacking backing{limit_family(LimitDirection::lower)};
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(15, 89, 2, 2, 8)) {
    auto rng = seeded_rng(90, stream++);
    const auto d = random_process(tree, rng, -1.0, 1.5);
    auto worse = d;
    std::uniform_real_distribution<double> cut(0.0, 0.3);
    for (NodeId id = 0; id < tree.node_count(); ++id) worse[id] -= cut(rng);
    const auto a = index_from_family(tree, backing, d, 0)[0];
    const auto b = index_from_family(tree, backing, worse, 0)[0];
    EXPECT_TRUE(level_at_least(a, b, 1e-6)) << a.to_string() << " < " << b.to_string();
  }
}

TEST(FamilyIndex, RightContinuity) {
  const IndexFamilyBacking backing{limit_family(LimitDirection::upper)};
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(10, 91, 2, 2, 8)) {
    auto rng = seeded_rng(92, stream++);
    const auto d = random_process(tree, rng, -1.0, 1.5);
    const auto base = index_from_family_at(tree, backing, d, tree.root());
    Level prev = Level::infinity();
    for (double c : {1e-2, 1e-4, 1e-6}) {
      const auto bumped = d.plus_payment(tree, 0, SliceValues{c}, 0);
      const auto l = index_from_family_at(tree, backing, bumped, tree.root());
      EXPECT_TRUE(level_at_least(l, base, 1e-6));
      EXPECT_TRUE(level_at_least(prev, l, 1e-6));
      prev = l;
    }
    if (!base.is_infinite()) EXPECT_LE(std::abs(prev.value_or(kLevelCap) - base.value()), 1e-4 * (1.0 + base.value()));
  }
}

TEST(Counterexample, FixtureReplay) {
  const auto fx = load_counterexample();
  EXPECT_EQ(fx.index, "draroc");
  const auto replay = d7_witness(fx.tree, fx.d, draroc_index());
  ASSERT_TRUE(replay.has_value());
  EXPECT_EQ(replay->t, fx.t);
  EXPECT_EQ(replay->atom, fx.atom);
  EXPECT_GT(fx.payment, 0.0);
  EXPECT_TRUE(level_close(replay->level, fx.level, 1e-12));
  ASSERT_EQ(replay->children.size(), fx.children.size());
  for (std::size_t i = 0; i < fx.children.size(); ++i) {
    EXPECT_TRUE(level_close(replay->children[i].level, fx.children[i].level, 1e-12));
    EXPECT_LT(fx.level, fx.children[i].level);
  }
  const auto direct = draroc_at(fx.tree, fx.d, fx.atom);
  EXPECT_TRUE(level_close(direct, fx.level, 1e-12));
}

TEST(Counterexample, DrarocFailsConsistencyOnFixture) {
  const auto fx = load_counterexample();
  IndexCheckOptions options;
  options.trials = 20;
  options.seed_processes = {fx.d};
  const auto axioms = check_axioms_D(fx.tree, draroc_index(), options);
  EXPECT_FALSE(axioms.at("D7").passed);
  EXPECT_FALSE(axioms.at("D7").witness.empty());
  const auto variants = check_D_variants(fx.tree, draroc_index(), options);
  EXPECT_FALSE(variants.at("D7-II").passed);
}

TEST(Counterexample, DglrHasNoWitnessOnFixture) {
  const auto fx = load_counterexample();
  EXPECT_FALSE(d7_witness(fx.tree, fx.d, dglr_index()).has_value());
  IndexCheckOptions options;
  options.trials = 20;
  options.seed_processes = {fx.d};
  EXPECT_TRUE(check_axioms_D(fx.tree, dglr_index(), options).at("D7").passed);
}

TEST(Counterexample, SearchIsDeterministicAcrossWorkers) {
  CounterexampleSearch config;
  const auto single = find_d7_counterexample(draroc_index(), config, 200);
  config.workers = 4;
  const auto parallel = find_d7_counterexample(draroc_index(), config, 200);
  ASSERT_TRUE(single.found());
  ASSERT_TRUE(parallel.found());
  EXPECT_EQ(single.fixture->candidate, parallel.fixture->candidate);
  EXPECT_EQ(single.fixture->d, parallel.fixture->d);
  const auto fx = load_counterexample();
  EXPECT_EQ(single.fixture->candidate, fx.candidate);
  EXPECT_EQ(single.fixture->d, fx.d);
}

TEST(Counterexample, ZeroBudgetIsNotFound) {
  const auto result = find_d7_counterexample(draroc_index(), {}, 0);
  EXPECT_FALSE(result.found());
  EXPECT_EQ(result.examined, 0u);
}

TEST(Counterexample, DglrSurvivesSmallSearch) {
  CounterexampleSearch config;
  config.workers = 2;
  const auto result = find_d7_counterexample(dglr_index(), config, 3000);
  EXPECT_FALSE(result.found());
  EXPECT_EQ(result.examined, 3000u);
}

TEST(D7Variants, D7IIIImpliesD7) {
  std::uint64_t seed = 20;
  for (const auto& tree : corpus(4, 93)) {
    for (const auto& index : {dglr_index(), draroc_index()}) {
      if (check_D_variants(tree, index, 40, ++seed).at("D7-III").passed) {
        EXPECT_TRUE(check_axioms_D(tree, index, 40, seed).at("D7").passed) << index.name();
      }
    }
  }
}

}  // namespace
}  // namespace dynrisk
