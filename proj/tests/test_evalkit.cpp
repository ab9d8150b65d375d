#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gscale/evalkit.hpp"

namespace gscale {
namespace {

SceneEstimate estimate(double h_cam, std::vector<double> heights,
                       std::vector<std::size_t> indices, std::vector<double> residuals = {}) {
  SceneEstimate e;
  e.cam_height_m = h_cam;
  e.heights_m = std::move(heights);
  e.object_indices = std::move(indices);
  LayerState last;
  last.residuals = residuals.empty() ? std::vector<double>(e.heights_m.size(), 0.0) : residuals;
  e.layers.push_back(last);
  return e;
}

TEST(Metrics, CameraHeightError) {
  const MetricReport r = compute_metrics(estimate(1.7, {}, {}), GroundTruth{1.6, {}});
  EXPECT_NEAR(r.e_hcam, 0.1, 1e-15);
  EXPECT_FALSE(r.e_hobj_mean.has_value());
}

TEST(Metrics, PerfectEstimateIsZero) {
  const GroundTruth gt{2.0, {1.7, 1.8, 1.6}};
  const MetricReport r = compute_metrics(estimate(2.0, {1.7, 1.8, 1.6}, {0, 1, 2}), gt);
  EXPECT_EQ(r.e_hcam, 0.0);
  EXPECT_EQ(r.e_hobj, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(*r.e_hobj_mean, 0.0);
  EXPECT_EQ(r.lvt, 0.0);
}

TEST(Metrics, FollowsObjectIndices) {
  SceneEstimate e = estimate(2.0, {1.9, 1.5}, {2, 0}, {0.01, -0.03});
  e.excluded.push_back({1, "box-height"});
  const MetricReport r = compute_metrics(e, GroundTruth{2.5, {1.6, 9.0, 1.8}});
  ASSERT_EQ(r.e_hobj.size(), 2u);
  EXPECT_NEAR(r.e_hobj[0], 0.1, 1e-12);
  EXPECT_NEAR(r.e_hobj[1], 0.1, 1e-12);
  EXPECT_NEAR(r.lvt, 0.02, 1e-15);
  EXPECT_EQ(r.abs_residuals, (std::vector<double>{0.01, 0.03}));
}

TEST(Metrics, OrderInvariant) {
  const GroundTruth gt{2.0, {1.6, 1.8, 1.75}};
  const MetricReport a =
      compute_metrics(estimate(2.1, {1.65, 1.7, 1.9}, {0, 1, 2}, {0.1, 0.2, 0.3}), gt);
  const MetricReport b =
      compute_metrics(estimate(2.1, {1.9, 1.65, 1.7}, {2, 0, 1}, {0.3, 0.1, 0.2}), gt);
  EXPECT_DOUBLE_EQ(*a.e_hobj_mean, *b.e_hobj_mean);
  EXPECT_DOUBLE_EQ(a.lvt, b.lvt);
}

TEST(Metrics, UprightMode) {
  const std::vector<double> ratios{0.5, 1.0};
  const MetricReport r =
      compute_metrics(estimate(2.0, {0.9, 1.7}, {0, 1}), GroundTruth{2.0, {1.8, 1.7}}, ratios);
  EXPECT_NEAR(r.e_hobj[0], 0.0, 1e-15);
  EXPECT_NEAR(r.e_hobj[1], 0.0, 1e-15);
  const MetricReport plain =
      compute_metrics(estimate(2.0, {0.9, 1.7}, {0, 1}), GroundTruth{2.0, {1.8, 1.7}});
  EXPECT_NEAR(plain.e_hobj[0], 0.9, 1e-15);
}

TEST(Metrics, MismatchesAreErrors) {
  EXPECT_THROW(compute_metrics(estimate(2.0, {1.7}, {0}), GroundTruth{2.0, {1.7, 1.8}}),
               std::invalid_argument);
  EXPECT_THROW(compute_metrics(estimate(2.0, {1.7}, {3}), GroundTruth{2.0, {1.7}}),
               std::invalid_argument);
  SceneEstimate bad = estimate(2.0, {1.7}, {0});
  bad.object_indices.push_back(1);
  EXPECT_THROW(compute_metrics(bad, GroundTruth{2.0, {}}), std::invalid_argument);
  const std::vector<double> ratios{1.0, 1.0};
  EXPECT_THROW(compute_metrics(estimate(2.0, {1.7}, {0}), GroundTruth{2.0, {1.7}}, ratios),
               std::invalid_argument);
}

TEST(ThresholdCurve, Examples) {
  const std::vector<double> res{0.0, 0.1};
  const std::vector<double> t{0.05};
  EXPECT_EQ(threshold_curve(res, t)[0], (std::pair<double, double>{0.05, 0.5}));

  const std::vector<double> positive{0.2, 0.3};
  const std::vector<double> zero{0.0, std::numeric_limits<double>::infinity()};
  const auto c = threshold_curve(positive, zero);
  EXPECT_EQ(c[0].second, 0.0);
  EXPECT_EQ(c[1].second, 1.0);
  EXPECT_THROW(threshold_curve({}, zero), std::invalid_argument);
}

TEST(ThresholdCurve, MonotoneAndBounded) {
  std::mt19937_64 rng(13);
  std::exponential_distribution<double> draw(50.0);
  std::vector<double> res(1000), t;
  for (double& r : res) r = draw(rng);
  for (int k = 0; k <= 200; ++k) t.push_back(k * 5e-4);
  const auto c = threshold_curve(res, t);
  for (std::size_t k = 0; k < c.size(); ++k) {
    EXPECT_GE(c[k].second, 0.0);
    EXPECT_LE(c[k].second, 1.0);
    if (k > 0) EXPECT_GE(c[k].second, c[k - 1].second);
  }
}

TEST(Summarize, Examples) {
  const std::vector<double> s{1, 2, 3};
  const Summary r = summarize(s);
  EXPECT_DOUBLE_EQ(r.mean, 2.0);
  EXPECT_NEAR(r.std, 0.816496580927726, 1e-15);
  EXPECT_DOUBLE_EQ(r.median, 2.0);

  const std::vector<double> one{4.5};
  EXPECT_EQ(summarize(one), (Summary{4.5, 0.0, 4.5}));

  const std::vector<double> even{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(summarize(even).median, 2.0);
  EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(Summarize, PermutationInvariant) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> draw(0.0, 1.0);
  std::vector<double> s(257);
  for (double& x : s) x = draw(rng);
  const Summary a = summarize(s);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(s.begin(), s.end(), rng);
    EXPECT_EQ(summarize(s), a);
  }
}

TEST(Aggregate, PoolsScenes) {
  const MetricReport a = compute_metrics(estimate(2.2, {1.8}, {0}, {0.01}), {2.0, {1.7}});
  const MetricReport b =
      compute_metrics(estimate(1.5, {1.5, 1.6}, {0, 1}, {0.02, 0.04}), {1.6, {1.6, 1.6}});
  const std::vector<MetricReport> reports{a, b};
  const AggregateReport agg = aggregate(reports);
  EXPECT_EQ(agg.scenes, 2u);
  EXPECT_NEAR(agg.e_hcam.mean, 0.15, 1e-12);
  ASSERT_TRUE(agg.e_hobj.has_value());
  EXPECT_NEAR(agg.e_hobj->mean, 0.075, 1e-12);
  EXPECT_NEAR(agg.lvt.mean, 0.07 / 3, 1e-12);
  EXPECT_DOUBLE_EQ(agg.lvt.median, 0.02);
  EXPECT_THROW(aggregate({}), std::invalid_argument);
}

}  // namespace
}  // namespace gscale
