#include "dynrisk/measure_sets.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dynrisk/errors.hpp"
#include "dynrisk/generators.hpp"
#include "dynrisk/oracle.hpp"
#include "test_support.hpp"

namespace dynrisk {
namespace {

using testing::binary;
using testing::corpus;

double atom_min(const ScenarioTree& tree, std::span<const double> x, NodeId id) {
  double m = INFINITY;
  for (auto leaf : tree.atom(id)) m = std::min(m, x[leaf]);
  return m;
}

StateVector peaked(std::size_t n, std::size_t at, double weight) {
  StateVector q(n, (1.0 - weight) / static_cast<double>(n - 1));
  q[at] = weight;
  return q;
}

TEST(FullSupport, EqualsPerAtomMinimumExactly) {
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(40, 21, 4)) {
    auto rng = seeded_rng(22, stream++);
    const auto x = random_terminal(tree, rng, -5.0, 5.0);
    for (int t = 0; t <= tree.horizon(); ++t) {
      const auto v = robust_conditional_expectation(tree, sets::FullSupport{}, x, t);
      for (auto id : tree.nodes_at(t)) EXPECT_EQ(v[tree.slot(id)], atom_min(tree, x, id));
    }
  }
}

TEST(Singleton, IsPlainConditionalExpectation) {
  for (const auto& tree : corpus(10, 4)) {
    auto rng = seeded_rng(4);
    const auto q = random_probability(tree, rng);
    const auto x = random_terminal(tree, rng);
    for (int t = 0; t <= tree.horizon(); ++t) {
      const auto a = robust_conditional_expectation(tree, sets::Singleton{q}, x, t);
      const auto b = conditional_expectation(tree, q, x, t);
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
  }
}

TEST(CapUpper, UnitCapIsReferenceExpectation) {
  for (const auto& tree : corpus(20, 5)) {
    auto rng = seeded_rng(6);
    const auto x = random_terminal(tree, rng);
    const auto p = tree.reference_probability();
    for (int t = 0; t <= tree.horizon(); ++t) {
      const auto a = robust_conditional_expectation(tree, sets::CapUpper{1.0}, x, t);
      const auto b = conditional_expectation(tree, p, x, t);
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
    }
  }
}

TEST(CapUpper, DepthOneHandExample) {
  const auto tree = binary(1);
  const StateVector x{0.0, 10.0};
  EXPECT_NEAR(robust_conditional_expectation(tree, sets::CapUpper{2.0}, x, 0)[0], 0.0, 1e-15);
  EXPECT_NEAR(oracle::brute_inf_at(tree, sets::CapUpper{2.0}, x, tree.root(),
                                   {.route = oracle::Route::vertex_enumeration}),
              0.0, 1e-12);
}

TEST(CapSets, IncreasingInCap) {
  const double caps[] = {1.0, 1.2, 1.5, 2.0, 3.0, 10.0};
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(30, 8)) {
    auto rng = seeded_rng(8, stream++);
    const auto x = random_terminal(tree, rng);
    for (int t = 0; t < tree.horizon(); ++t) {
      SliceValues prev_u, prev_l;
      for (double a : caps) {
        const auto u = robust_conditional_expectation(tree, sets::CapUpper{a}, x, t);
        const auto l = robust_conditional_expectation(tree, sets::CapLower{a}, x, t);
        for (std::size_t k = 0; k < prev_u.size(); ++k) {
          EXPECT_LE(u[k], prev_u[k] + 1e-12);
          EXPECT_LE(l[k], prev_l[k] + 1e-12);
        }
        prev_u = u;
        prev_l = l;
      }
    }
  }
}

TEST(CapSets, GreedyMatchesVertexEnumeration) {
  std::size_t compared = 0;
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(100, 31, 3, 3, 12)) {
    auto rng = seeded_rng(32, stream++);
    const auto x = random_terminal(tree, rng);
    std::uniform_real_distribution<double> cap(1.0, 4.0);
    const double a = cap(rng);
    const int t = static_cast<int>(stream % static_cast<std::uint64_t>(tree.horizon()));
    for (const MeasureSet set : {MeasureSet{sets::CapUpper{a}}, MeasureSet{sets::CapLower{a}}}) {
      const auto fast = robust_conditional_expectation(tree, set, x, t);
      const auto slow = oracle::brute_inf_conditional_expectation(tree, set, x, t);
      for (std::size_t k = 0; k < fast.size(); ++k) EXPECT_NEAR(fast[k], slow[k], 1e-9);
      ++compared;
    }
  }
  EXPECT_EQ(compared, 200u);
}

TEST(ExtremePoints, SubsetHasLargerInfimum) {
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(20, 12)) {
    auto rng = seeded_rng(12, stream++);
    sets::ExtremePoints big;
    for (int i = 0; i < 4; ++i) big.vertices.push_back(random_probability(tree, rng));
    sets::ExtremePoints small{{big.vertices[0], big.vertices[2]}};
    const auto x = random_terminal(tree, rng);
    for (int t = 0; t <= tree.horizon(); ++t) {
      const auto a = robust_conditional_expectation(tree, small, x, t);
      const auto b = robust_conditional_expectation(tree, big, x, t);
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_GE(a[k], b[k] - 1e-12);
    }
  }
}

TEST(ExcludeOne, InfimumIsAtomMinimum) {
  const auto tree = binary(2);
  const StateVector p(tree.reference_probability().begin(), tree.reference_probability().end());
  const StateVector x{0.3, -0.2, 1.0, 4.0};
  const auto v = robust_conditional_expectation(tree, sets::ExcludeOne{p}, x, 1);
  EXPECT_EQ(v[0], -0.2);
  EXPECT_EQ(v[1], 1.0);
}

TEST(Validation, RejectsMalformedSets) {
  const auto tree = binary(2);
  EXPECT_THROW(validate_measure_set(tree, sets::CapUpper{0.5}), InputError);
  EXPECT_THROW(validate_measure_set(tree, sets::CapLower{NAN}), InputError);
  EXPECT_THROW(validate_measure_set(tree, sets::Singleton{{0.5, 0.5}}), InputError);
  EXPECT_THROW(validate_measure_set(tree, sets::Singleton{{0.5, 0.5, 0.5, -0.5}}), InputError);
  EXPECT_THROW(validate_measure_set(tree, sets::ExtremePoints{}), InputError);
  EXPECT_THROW(validate_measure_set(tree, sets::ExcludeOne{{1.0, 0.0, 0.0, 0.0}}), InputError);
  EXPECT_NO_THROW(validate_measure_set(tree, sets::FullSupport{}));
  MeasureSetSequence short_seq{{sets::FullSupport{}}};
  EXPECT_THROW(validate_sequence(tree, short_seq), InputError);
}

TEST(Singleton, NullAtomIsNumericalError) {
  const auto tree = binary(2);
  const StateVector q{1.0, 0.0, 0.0, 0.0};
  const StateVector x{1.0, 2.0, 3.0, 4.0};
  EXPECT_THROW(robust_conditional_expectation(tree, sets::Singleton{q}, x, 1), NumericalError);
}

TEST(Membership, ReferenceAndSingletons) {
  const auto tree = binary(2);
  const StateVector p(tree.reference_probability().begin(), tree.reference_probability().end());
  for (double a : {1.0, 1.5, 3.0}) {
    EXPECT_TRUE(is_member(tree, p, sets::CapUpper{a}));
    EXPECT_TRUE(is_member(tree, p, sets::CapLower{a}));
  }
  EXPECT_TRUE(is_member(tree, p, sets::FullSupport{}));
  EXPECT_FALSE(is_member(tree, p, sets::Singleton{peaked(4, 0, 0.7)}));
  EXPECT_FALSE(is_member(tree, p, sets::ExcludeOne{p}));
  EXPECT_FALSE(is_member(tree, StateVector{1.0, 0.0, 0.0, 0.0}, sets::FullSupport{}));
}

TEST(Membership, SampledCapMembersObeyDensityBound) {
  std::uint64_t stream = 0;
  for (const auto& tree : corpus(25, 17, 4)) {
    for (double a : {1.5, 3.0}) {
      auto rng = seeded_rng(18, stream++);
      for (int i = 0; i < 8; ++i) {
        const auto q = sample_member(tree, sets::CapUpper{a}, rng);
        ASSERT_TRUE(is_member(tree, q, sets::CapUpper{a}));
        const auto z = density_process(tree, q);
        for (NodeId id = 0; id < tree.node_count(); ++id) {
          EXPECT_LE(z[id], std::pow(a, tree.node(id).time) + 1e-12);
        }
        const auto ql = sample_member(tree, sets::CapLower{a}, rng);
        EXPECT_TRUE(is_member(tree, ql, sets::CapLower{a}));
      }
    }
  }
}

TEST(Membership, DensityProcessIsAtomRatio) {
  const auto tree = binary(1);
  const StateVector q{0.8, 0.2};
  const auto z = density_process(tree, q);
  EXPECT_NEAR(z[0], 1.0, 1e-15);
  EXPECT_NEAR(z[1], 1.6, 1e-15);
  EXPECT_NEAR(z[2], 0.4, 1e-15);
  EXPECT_TRUE(is_member(tree, q, sets::CapUpper{1.6}));
  EXPECT_FALSE(is_member(tree, q, sets::CapUpper{1.5}));
}

TEST(Consistency, StrongConsistencyOfStandardSets) {
  for (const auto& tree : corpus(8, 41)) {
    auto rng = seeded_rng(41);
    const auto q = random_probability(tree, rng);
    EXPECT_TRUE(check_strong_consistency(tree, sets::Singleton{q}, 50, 1).passed);
    EXPECT_TRUE(check_strong_consistency(tree, sets::FullSupport{}, 50, 2).passed);
    EXPECT_TRUE(check_strong_consistency(tree, sets::CapUpper{3.0}, 50, 3).passed);
    EXPECT_TRUE(check_strong_consistency(tree, sets::CapLower{3.0}, 50, 4).passed);
  }
}

TEST(Consistency, ConstantSequencesAreDynamicallyConsistent) {
  const auto tree = binary(3);
  auto rng = seeded_rng(43);
  const auto q = random_probability(tree, rng);
  for (const MeasureSet set : {MeasureSet{sets::Singleton{q}}, MeasureSet{sets::FullSupport{}},
                               MeasureSet{sets::CapUpper{2.0}}, MeasureSet{sets::CapLower{2.0}}}) {
    const auto report =
        check_dynamic_consistency(tree, MeasureSetSequence::constant(tree, set), 100, 7);
    EXPECT_TRUE(report.passed) << kind_name(set);
    EXPECT_GT(report.evaluations, 0u);
  }
}

TEST(Consistency, NonConstantExcludeOneSequence) {
  const auto tree = binary(2);
  auto rng = seeded_rng(44);
  MeasureSetSequence seq;
  for (int t = 0; t <= tree.horizon(); ++t) seq.sets.push_back(sets::ExcludeOne{random_probability(tree, rng)});
  EXPECT_TRUE(check_dynamic_consistency(tree, seq, 100, 9).passed);
}

TEST(Consistency, AlternatingSingletonsFail) {
  const auto tree = binary(2);
  const auto left = peaked(4, 0, 0.97);
  const auto right = peaked(4, 3, 0.97);
  const MeasureSetSequence seq{{sets::Singleton{left}, sets::Singleton{right}, sets::Singleton{left}}};
  const auto report = check_dynamic_consistency(tree, seq, 100, 0);
  ASSERT_FALSE(report.passed);
  ASSERT_TRUE(report.violation.has_value());
  EXPECT_FALSE(report.violation->condition.empty());
}

TEST(Consistency, StrongImpliesWeak) {
  std::uint64_t seed = 0;
  for (const auto& tree : corpus(10, 47)) {
    for (const MeasureSet set : {MeasureSet{sets::FullSupport{}}, MeasureSet{sets::CapUpper{2.5}},
                                 MeasureSet{sets::CapLower{1.5}}}) {
      ++seed;
      if (check_strong_consistency(tree, set, 30, seed).passed) {
        EXPECT_TRUE(check_weak_consistency(tree, set, 30, seed).passed) << kind_name(set);
      }
    }
    auto rng = seeded_rng(48, seed);
    EXPECT_TRUE(check_weak_consistency(tree, sets::Singleton{random_probability(tree, rng)}, 30, seed).passed);
  }
}

TEST(Consistency, ProbeVariablesAreDeterministic) {
  const auto tree = binary(2);
  const auto a = probe_variables(tree, 5, 3);
  const auto b = probe_variables(tree, 5, 3);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), tree.leaf_count() + 2 + 5);
}

}  // namespace
}  // namespace dynrisk
