#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dmf/errors.hpp"
#include "dmf/measure.hpp"

using dmf::HierarchicalMeasure;
using dmf::Population;

namespace {

// W1 between two empirical measures by integrating |F_a - F_b| over the
// merged support.
double w1_by_cdf(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pts(a);
  pts.insert(pts.end(), b.begin(), b.end());
  std::sort(pts.begin(), pts.end());
  auto cdf = [](const std::vector<double>& v, double x) {
    return static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) / v.size();
  };
  double total = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += std::abs(cdf(a, pts[i]) - cdf(b, pts[i])) * (pts[i + 1] - pts[i]);
  return total;
}

}  // namespace

TEST(Population, KeepsAtomsInOrder) {
  const auto p = dmf::make_population({1.0, -1.0});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], -1.0);
  EXPECT_TRUE(dmf::make_population({0.0}).is_point_mass());
}

TEST(Population, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(dmf::make_population({}), dmf::InvalidMeasure);
  EXPECT_THROW(dmf::make_population({1.0, std::numeric_limits<double>::infinity()}),
               dmf::InvalidMeasure);
  EXPECT_THROW(dmf::make_population({std::nan("")}), dmf::InvalidMeasure);
}

TEST(Population, GaussianMaterializeMean) {
  const auto p = dmf::materialize(dmf::ScalarLaw{dmf::LeafFamily::gaussian, 0.0, 1.0}, 10000, 5);
  double s = 0;
  for (double a : p.atoms()) s += a;
  EXPECT_LT(std::abs(s / 1e4), 4.0 / 100.0);
}

TEST(Population, DrawFrequencies) {
  const auto single = dmf::make_population({3.0});
  dmf::RandomStream rng(2, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(dmf::draw(single, rng), 3.0);
  const auto two = dmf::make_population({0.0, 1.0});
  int ones = 0;
  for (int i = 0; i < 100000; ++i) ones += dmf::draw(two, rng) == 1.0;
  EXPECT_NEAR(ones / 1e5, 0.5, 0.01);
}

TEST(Population, DrawIsDeterministicPerStream) {
  const auto p = dmf::materialize(dmf::ScalarLaw{dmf::LeafFamily::gaussian, 0.0, 1.0}, 100, 1);
  dmf::RandomStream a(9, 1), b(9, 1);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(p.draw(a), p.draw(b));
}

TEST(Hierarchy, ChildrenMustShareDepth) {
  HierarchicalMeasure leaf(dmf::make_population({1.0}));
  HierarchicalMeasure deeper(std::vector<HierarchicalMeasure>{leaf});
  EXPECT_THROW(HierarchicalMeasure(std::vector<HierarchicalMeasure>{leaf, deeper}),
               dmf::InvalidMeasure);
  EXPECT_EQ(deeper.depth(), 1);
}

TEST(Hierarchy, DegenerateChainAtEveryDepth) {
  for (int d = 0; d <= 4; ++d) {
    const auto hm = HierarchicalMeasure::degenerate(1.25, d);
    EXPECT_EQ(hm.depth(), d);
    EXPECT_TRUE(hm.is_degenerate());
    for (std::uint64_t s = 0; s < 20; ++s) {
      dmf::RandomStream rng(s, 0);
      const auto chain = dmf::draw_chain(hm, rng);
      EXPECT_EQ(chain.leaf, 1.25);
      EXPECT_EQ(chain.path.size(), static_cast<std::size_t>(d));
    }
  }
}

TEST(Hierarchy, TwoPointMixtureFrequencies) {
  HierarchicalMeasure hm(std::vector<HierarchicalMeasure>{
      HierarchicalMeasure(dmf::make_population({-1.0})),
      HierarchicalMeasure(dmf::make_population({1.0}))});
  EXPECT_FALSE(hm.is_degenerate());
  dmf::RandomStream rng(3, 0);
  int plus = 0;
  for (int i = 0; i < 100000; ++i) {
    const double x = dmf::draw_chain(hm, rng).leaf;
    ASSERT_TRUE(x == 1.0 || x == -1.0);
    plus += x > 0;
  }
  EXPECT_NEAR(plus / 1e5, 0.5, 0.01);
}

TEST(Hierarchy, ParametricChainLevelVariances) {
  // gaussian:0,0.5 with level sds 0.6, 0.8: leaf variance 0.36 + 0.64 + 0.25.
  const auto hm = dmf::parse_measure_spec("gaussian:0,0.5@0.6,0.8");
  EXPECT_EQ(hm.depth(), 2);
  dmf::RandomStream rng(4, 0);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = dmf::draw_chain(hm, rng).leaf;
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 5 * std::sqrt(1.25 / n));
  EXPECT_NEAR(s2 / n, 1.25, 5 * 1.25 * std::sqrt(2.0 / n));
}

TEST(Hierarchy, CursorConditionalDraws) {
  // Given the level-0 measure, leaves share its center.
  const auto hm = dmf::parse_measure_spec("point:0@1");
  dmf::RandomStream rng(5, 0);
  const auto eta = dmf::MeasureCursor(hm).descend(rng);
  EXPECT_TRUE(eta.is_degenerate());
  const double x = eta.draw_leaf(rng);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(eta.draw_leaf(rng), x);
}

TEST(Wasserstein, HandComputedCases) {
  const auto a = dmf::make_population({0.0, 1.0});
  const auto b = dmf::make_population({0.0, 0.0});
  EXPECT_DOUBLE_EQ(dmf::wasserstein1(a, b), 0.5);
  EXPECT_DOUBLE_EQ(dmf::wasserstein1(a, a), 0.0);
  EXPECT_DOUBLE_EQ(dmf::wasserstein1(dmf::make_population({0.0}), dmf::make_population({-2.5})), 2.5);
}

TEST(Wasserstein, MatchesCdfIntegralForUnequalSizes) {
  dmf::RandomStream rng(6, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(3 + rng.below(40)), b(1 + rng.below(40));
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = 0.5 + 2 * rng.normal();
    const double w = dmf::wasserstein1(Population(a), Population(b));
    EXPECT_NEAR(w, w1_by_cdf(a, b), 1e-12);
    EXPECT_NEAR(w, dmf::wasserstein1(Population(b), Population(a)), 1e-12);
  }
}

TEST(Wasserstein, ZeroIffSameMultiset) {
  const auto a = dmf::make_population({3.0, 1.0, 2.0});
  const auto b = dmf::make_population({1.0, 2.0, 3.0});
  const auto c = dmf::make_population({1.0, 2.0, 3.5});
  EXPECT_EQ(dmf::wasserstein1(a, b), 0.0);
  EXPECT_GT(dmf::wasserstein1(a, c), 0.0);
}

TEST(MeasureText, ExactRoundTrip) {
  dmf::RandomStream rng(7, 0);
  std::vector<HierarchicalMeasure> kids;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> atoms(5);
    for (auto& v : atoms) v = rng.normal() * std::pow(10.0, static_cast<int>(rng.below(20)) - 10);
    kids.emplace_back(Population(atoms));
  }
  kids.push_back(dmf::parse_measure_spec("twopoint:0.3"));
  const HierarchicalMeasure hm(std::move(kids));
  std::stringstream ss;
  dmf::save_measure(ss, hm);
  EXPECT_EQ(dmf::load_measure(ss), hm);

  const auto chain = dmf::parse_measure_spec("gaussian:0.1,0.7@0.2,0.3");
  std::stringstream cs;
  dmf::save_measure(cs, chain);
  EXPECT_EQ(dmf::load_measure(cs), chain);
}

TEST(MeasureText, ErrorsCarryLineNumbers) {
  std::stringstream bad("depth 1\n{\n  {\n    0.5\n    oops\n  }\n}\n");
  try {
    dmf::load_measure(bad);
    FAIL() << "expected a parse error";
  } catch (const dmf::Error& e) {
    EXPECT_NE(std::string(e.what()).find("5"), std::string::npos) << e.what();
  }
}

TEST(MeasureSpec, ParsesFamilies) {
  EXPECT_TRUE(dmf::parse_measure_spec("point:0").is_population());
  EXPECT_TRUE(dmf::parse_measure_spec("point:2@0").is_degenerate());
  EXPECT_EQ(dmf::parse_measure_spec("gaussian:0,1@0.5").depth(), 1);
  EXPECT_THROW(dmf::parse_measure_spec("cauchy:1"), dmf::Error);
  EXPECT_THROW(dmf::parse_measure_spec("gaussian:0,-1"), dmf::Error);
}
