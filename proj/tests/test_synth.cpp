#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gscale/solver.hpp"
#include "gscale/synth.hpp"

namespace gscale {
namespace {

TEST(SceneRng, PortableTransforms) {
  SceneRng a(42), b(42);
  std::mt19937_64 ref(42);
  const double u = a.uniform01();
  EXPECT_EQ(u, static_cast<double>(ref() >> 11) * 0x1.0p-53);
  (void)b.uniform01();
  EXPECT_EQ(a.next(), b.next());
}

TEST(SampleScene, DeterministicPerSeed) {
  const SceneRanges ranges;
  const NoiseModel noise{0.003, 0.01, 0.02, 0.1};
  const SceneSpec a = sample_scene(ranges, 6, 42, noise);
  const SceneSpec b = sample_scene(ranges, 6, 42, noise);
  EXPECT_EQ(a, b);
  const Observation oa = render_detections(a, noise), ob = render_detections(b, noise);
  ASSERT_EQ(oa.boxes.size(), ob.boxes.size());
  for (std::size_t i = 0; i < oa.boxes.size(); ++i) EXPECT_EQ(oa.boxes[i], ob.boxes[i]);
  EXPECT_EQ(oa.v0, ob.v0);
  EXPECT_NE(sample_scene(ranges, 6, 43, noise), a);
}

TEST(SampleScene, NeedsObjects) {
  EXPECT_THROW(sample_scene(SceneRanges{}, 0, 1), InputError);
}

TEST(SampleScene, InfeasibleRangesAreReported) {
  SceneRanges ranges;
  ranges.depth_min_m = 5000.0;
  ranges.depth_max_m = 6000.0;
  EXPECT_THROW(sample_scene(ranges, 1, 1), InputError);
}

TEST(SampleScene, ObjectsInFrameAndInRange) {
  const SceneRanges ranges;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SceneSpec s = sample_scene(ranges, 8, seed);
    EXPECT_GE(s.camera.cam_height_m, ranges.cam_height_min_m);
    EXPECT_LE(s.camera.cam_height_m, ranges.cam_height_max_m);
    EXPECT_LE(std::abs(s.camera.pitch_rad), ranges.pitch_max_rad);
    const Observation obs = render_detections(s);
    const double w = ranges.image_w_px / ranges.image_h_px;
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      EXPECT_GE(s.objects[i].depth_m, ranges.depth_min_m);
      EXPECT_LE(s.objects[i].depth_m, ranges.depth_max_m);
      const DetectionBox& b = obs.boxes[i];
      EXPECT_GE(b.v_top, 0.0);
      EXPECT_LE(b.v_bottom, 1.0);
      EXPECT_GE(b.u_left, 0.0);
      EXPECT_LE(b.u_right, w);
      EXPECT_GT(b.v_bottom - obs.v0, ranges.min_horizon_gap - 1e-12);
    }
  }
}

TEST(SampleScene, PersonHeightsFollowPrior) {
  std::vector<double> h;
  for (std::uint64_t seed = 0; h.size() < 10000; ++seed)
    for (const auto& o : sample_scene(SceneRanges{}, 50, seed).objects) h.push_back(o.height_m);
  h.resize(10000);
  double mean = 0;
  for (double x : h) mean += x;
  mean /= static_cast<double>(h.size());
  double var = 0;
  for (double x : h) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(h.size() - 1));
  EXPECT_NEAR(mean, 1.70, 0.01);
  EXPECT_NEAR(sd, 0.09, 0.01);
}

TEST(SampleScene, HeightModes) {
  SceneRanges ranges;
  ranges.person_fraction = 0.5;
  ranges.height_mode = HeightMode::PriorMean;
  for (const auto& o : sample_scene(ranges, 20, 5).objects)
    EXPECT_EQ(o.height_m, o.category == Category::Person ? 1.70 : 1.59);

  ranges.height_mode = HeightMode::Offset;
  int above = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& o : sample_scene(ranges, 10, seed).objects) {
      const CategoryPrior p = PriorTable{}.get(o.category);
      EXPECT_NEAR(std::abs(o.height_m - p.mu_m), 2.0 * p.sigma_m, 1e-12);
      above += o.height_m > p.mu_m;
      ++total;
    }
  }
  EXPECT_GT(above, total / 4);
  EXPECT_LT(above, 3 * total / 4);
}

TEST(SampleScene, OutlierHeightsFollowUniformLaw) {
  // Under U[0.5 mu, 1.5 mu] the share outside mu +/- 3 sigma is 1 - 6 sigma / mu.
  const NoiseModel noise{0, 0, 0, 1.0};
  int outside = 0, total = 0;
  for (std::uint64_t seed = 0; total < 5000; ++seed) {
    for (const auto& o : sample_scene(SceneRanges{}, 25, seed, noise).objects) {
      EXPECT_GE(o.height_m, 0.5 * 1.70);
      EXPECT_LE(o.height_m, 1.5 * 1.70);
      outside += std::abs(o.height_m - 1.70) > 3 * 0.09;
      ++total;
    }
  }
  const double expected = 1.0 - 6 * 0.09 / 1.70;
  const double se = std::sqrt(expected * (1 - expected) / total);
  EXPECT_NEAR(static_cast<double>(outside) / total, expected, 4 * se);
}

TEST(Render, BoxNoiseMatchesNominal) {
  const NoiseModel noise{0.002, 0, 0, 0};
  double ss = 0;
  int n = 0;
  for (std::uint64_t seed = 0; n < 10000; ++seed) {
    const SceneSpec s = sample_scene(SceneRanges{}, 25, seed);
    const Observation clean = render_detections(s), noisy = render_detections(s, noise);
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const double d = noisy.boxes[i].v_top - clean.boxes[i].v_top;
      ss += d * d;
      ++n;
    }
  }
  EXPECT_NEAR(std::sqrt(ss / n), 0.002, 0.2 * 0.002);
}

TEST(Render, HorizonAndFovNoise) {
  const SceneSpec s = sample_scene(SceneRanges{}, 3, 11);
  const Observation clean = render_detections(s);
  EXPECT_DOUBLE_EQ(clean.v0, horizon_from_pitch(s.camera).v0);
  EXPECT_DOUBLE_EQ(clean.fov_rad, s.camera.fov_rad);
  const Observation noisy = render_detections(s, NoiseModel{0, 0.01, 0.02, 0});
  EXPECT_NE(noisy.v0, clean.v0);
  EXPECT_NE(noisy.fov_rad, clean.fov_rad);
  for (std::size_t i = 0; i < clean.boxes.size(); ++i) EXPECT_EQ(noisy.boxes[i], clean.boxes[i]);
}

TEST(Render, NoiselessRoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SceneSpec s = sample_scene(SceneRanges{}, 6, seed);
    const Observation obs = render_detections(s);
    const CameraParams cam =
        camera_from_horizon(obs.v0, obs.fov_rad, s.camera.cam_height_m, 1.0, 1.0, obs.principal_v);
    const GroundTruth gt = ground_truth(s);
    const auto res = reprojection_loss(cam, gt.heights_m, obs.boxes);
    EXPECT_LE(res.loss, 1e-9);
    EXPECT_LE(std::abs(cam.cam_height_m - gt.cam_height_m) / gt.cam_height_m, 1e-9);
  }
}

}  // namespace
}  // namespace gscale
