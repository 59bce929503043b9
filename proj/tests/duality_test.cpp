#include "dynrisk/duality.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dynrisk/errors.hpp"
#include "dynrisk/generators.hpp"
#include "test_support.hpp"

namespace dynrisk {
namespace {

using testing::binary;
using testing::two_leaf;

std::vector<AdaptedProcess> processes(const ScenarioTree& tree, std::size_t n, std::uint64_t seed) {
  std::vector<AdaptedProcess> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = seeded_rng(seed, i);
    out.push_back(random_process(tree, rng));
  }
  return out;
}

TEST(GeometricGrid, EndpointsAndRatio) {
  const auto g = geometric_grid();
  ASSERT_EQ(g.size(), 32u);
  EXPECT_NEAR(g.front(), 1e-3, 1e-18);
  EXPECT_NEAR(g.back(), 1e3, 1e-9);
  for (std::size_t i = 2; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], g[1] / g[0], 1e-12);
  EXPECT_THROW(geometric_grid(1.0, 0.5, 4), InputError);
}

TEST(RoundTripReport, PassIffWithinTolerance) {
  RoundTripReport r;
  r.tolerance = 1e-5;
  r.table.push_back({.error = 2e-6});
  r.table.push_back({.error = 9e-6});
  r.finish();
  EXPECT_DOUBLE_EQ(r.max_discrepancy, 9e-6);
  EXPECT_TRUE(r.pass);
  r.table.push_back({.error = 2e-5});
  r.finish();
  EXPECT_FALSE(r.pass);
}

TEST(FromFamily, CapFamilyRoundTrips) {
  const auto tree = binary(2);
  const auto family = risk_family_from_sets(limit_family(LimitDirection::upper), "upper-cap");
  const auto grid = geometric_grid(1e-3, 1e3, 8);
  const auto corpus = processes(tree, 6, 101);
  const auto report = roundtrip_from_family(tree, family, grid, corpus, 1e-5);
  EXPECT_TRUE(report.pass) << report.max_discrepancy;
  EXPECT_TRUE(report.monotone);
  EXPECT_TRUE(report.continuity_ok) << report.continuity_probe;
  EXPECT_FALSE(report.table.empty());
  EXPECT_LE(report.max_discrepancy, report.tolerance);
}

TEST(FromFamily, FlatSingletonFamilyIsDegenerate) {
  const auto tree = binary(2);
  auto rng = seeded_rng(102);
  const MeasureSet q = sets::Singleton{random_probability(tree, rng)};
  const RiskFamily flat{"flat", [q](double) { return dcrm_from_set(q); }};
  const auto grid = geometric_grid(1e-2, 1e2, 5);
  const auto corpus = processes(tree, 4, 103);
  for (const auto& d : corpus) {
    for (const auto& l : index_from_family(tree, IndexFamilyBacking{flat}, d, 0)) {
      EXPECT_TRUE(l.is_infinite() || l == Level::zero());
    }
  }
  const auto report = roundtrip_from_family(tree, flat, grid, corpus, 1e-5);
  EXPECT_TRUE(report.pass) << report.max_discrepancy;
}

TEST(FromFamily, DecreasingFamilyIsRejected) {
  const auto tree = binary(1);
  const RiskFamily decreasing{"decreasing", [](double x) {
                                return RiskMeasure::from_atoms(
                                    "shifted", [x](const ScenarioTree&, int, const AdaptedProcess&, NodeId) { return -x; });
                              }};
  const auto grid = geometric_grid(1e-1, 1e1, 4);
  const auto corpus = processes(tree, 2, 104);
  EXPECT_THROW(roundtrip_from_family(tree, decreasing, grid, corpus, 1e-5), InputError);
}

TEST(FromIndex, DglrRoundTrips) {
  const auto tree = binary(2);
  const auto grid = geometric_grid(1e-3, 1e3, 8);
  const auto corpus = processes(tree, 6, 105);
  const auto report = roundtrip_from_index(tree, dglr_index(), grid, corpus, 1e-4);
  EXPECT_TRUE(report.pass) << report.max_discrepancy;
  EXPECT_TRUE(report.continuity_ok) << report.continuity_probe;
}

TEST(FromIndex, TwoLevelIndexIsAFixedPoint) {
  const auto tree = two_leaf(0.3);
  const auto grid = geometric_grid(1e-2, 1e2, 6);
  std::vector<AdaptedProcess> corpus;
  for (double a : {-1.0, 0.0, 1.0}) {
    for (double b : {-0.5, 0.5}) {
      for (double r : {-0.25, 0.0, 0.25}) corpus.push_back(AdaptedProcess({r, a, b}));
    }
  }
  const auto report = roundtrip_from_index(tree, two_level_index(), grid, corpus, 1e-6);
  EXPECT_TRUE(report.pass) << report.max_discrepancy;
  EXPECT_EQ(report.max_discrepancy, 0.0);
}

TEST(FromIndex, TwoLevelValues) {
  const auto tree = two_leaf();
  const auto index = two_level_index();
  EXPECT_TRUE(index.at_atom(tree, 0, AdaptedProcess({0.0, 1.0, 0.0}), tree.root()).is_infinite());
  EXPECT_EQ(index.at_atom(tree, 0, AdaptedProcess({0.0, 1.0, -0.1}), tree.root()), Level::zero());
}

TEST(FromIndex, NormalizationFailureNamesTheInput) {
  const auto tree = binary(1);
  const auto capped = AcceptabilityIndex::from_atoms(
      "capped", [](const ScenarioTree&, int, const AdaptedProcess&, NodeId) { return Level::finite(0.5); });
  const auto grid = geometric_grid(1.0, 4.0, 3);
  const auto corpus = processes(tree, 2, 106);
  try {
    roundtrip_from_index(tree, capped, grid, corpus, 1e-4);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("x="), std::string::npos) << what;
    EXPECT_NE(what.find("t="), std::string::npos) << what;
  }
}

TEST(FromIndex, DrarocReportIsInformational) {
  const auto tree = binary(2);
  const auto grid = geometric_grid(1e-2, 1e2, 4);
  const auto corpus = processes(tree, 3, 107);
  const auto report = roundtrip_from_index(tree, draroc_index(), grid, corpus, 1e-4);
  EXPECT_FALSE(report.table.empty());
  EXPECT_TRUE(std::isfinite(report.max_discrepancy) || std::isinf(report.max_discrepancy));
}

}  // namespace
}  // namespace dynrisk
