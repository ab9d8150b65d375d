#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gscale/geometry.hpp"
#include "oracles.hpp"

namespace gscale {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

CameraParams level_camera() {
  // f = 500 px on a 512 px tall image.
  CameraParams cam = make_camera(0.0, fov_from_focal(500.0, 512.0), 1.6, 640.0, 512.0);
  return cam;
}

CameraParams pitched_camera() {
  return make_camera(15.0 * kDeg, 60.0 * kDeg, 2.0, 640.0, 512.0);
}

TEST(Intrinsics, FocalFromFov) {
  EXPECT_DOUBLE_EQ(focal_from_fov(90.0 * kDeg, 512.0), 256.0);
  EXPECT_NEAR(focal_from_fov(60.0 * kDeg, 512.0), 443.4050067376326, 1e-9);
}

TEST(Intrinsics, NearDomainEdgeRoundTrips) {
  const double fov = 179.99 * kDeg;
  const double f = focal_from_fov(fov, 512.0);
  EXPECT_NEAR(f, 0.022340214482251857, 1e-12);
  EXPECT_NEAR(fov_from_focal(f, 512.0), fov, 1e-9 * fov);
}

TEST(Intrinsics, RejectsOutOfDomainFov) {
  EXPECT_THROW(focal_from_fov(0.0, 512.0), GeometryError);
  EXPECT_THROW(focal_from_fov(std::numbers::pi, 512.0), GeometryError);
  EXPECT_THROW(focal_from_fov(-0.3, 512.0), GeometryError);
}

TEST(Intrinsics, FovRoundTripSweep) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> fov(1e-3, std::numbers::pi - 1e-3);
  for (int k = 0; k < 1000; ++k) {
    const double x = fov(rng);
    EXPECT_NEAR(fov_from_focal(focal_from_fov(x, 480.0), 480.0), x, 1e-12 * x);
  }
}

TEST(Camera, ValidateRejectsInconsistentFocal) {
  CameraParams cam = pitched_camera();
  cam.focal_px *= 1.001;
  EXPECT_THROW(validate(cam), GeometryError);
  cam = pitched_camera();
  cam.cam_height_m = 0.0;
  EXPECT_THROW(validate(cam), GeometryError);
  cam = pitched_camera();
  cam.pitch_rad = std::numbers::pi / 2;
  EXPECT_THROW(validate(cam), GeometryError);
}

TEST(Horizon, LevelCameraSitsAtPrincipalRow) {
  const auto cam = level_camera();
  EXPECT_DOUBLE_EQ(horizon_from_pitch(cam).v0 * 512.0, 256.0);
}

TEST(Horizon, PitchedCamera) {
  const auto cam = pitched_camera();
  EXPECT_NEAR(horizon_from_pitch(cam).v0 * 512.0, 374.8100134752652, 1e-9);
  EXPECT_NEAR(pitch_from_horizon(cam, horizon_from_pitch(cam)), 15.0 * kDeg, 1e-12);
}

TEST(Horizon, AgreesWithOracleAtInfinity) {
  for (double pitch : {-40.0, -10.0, 0.0, 12.0, 35.0}) {
    auto cam = make_camera(pitch * kDeg, 55.0 * kDeg, 3.0, 640.0, 480.0);
    const auto uv = projection_oracle(cam, Vector3<double>(0.0, 3.0, 1e9));
    EXPECT_NEAR(uv.y(), horizon_from_pitch(cam).v0 * 480.0, 1e-6);
  }
}

TEST(ProjectVertical, LevelCamera) {
  const auto cam = level_camera();
  const auto span = project_vertical(cam, GroundObject{8.0, 0.0, 1.7});
  EXPECT_NEAR(span.v_bottom * 512.0, 356.0, 1e-9);
  EXPECT_NEAR(span.v_top * 512.0, 249.75, 1e-9);
}

TEST(ProjectVertical, ZeroHeightCollapses) {
  const auto cam = pitched_camera();
  const auto span = project_vertical(cam, GroundObject{7.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(span.v_top, span.v_bottom);
}

TEST(ProjectVertical, PitchedMatchesOracle) {
  const auto cam = pitched_camera();
  const auto span = project_vertical(cam, GroundObject{10.0, 0.0, 1.7});
  const auto top = projection_oracle(cam, Vector3<double>(0.0, 1.7, 10.0));
  const auto bottom = projection_oracle(cam, Vector3<double>(0.0, 0.0, 10.0));
  EXPECT_NEAR(span.v_top * 512.0, top.y(), 1e-9);
  EXPECT_NEAR(span.v_bottom * 512.0, bottom.y(), 1e-9);
  EXPECT_NEAR(span.v_bottom * 512.0, 475.2400539010607, 1e-9);
  EXPECT_NEAR(span.v_top * 512.0, 389.1827499865336, 1e-9);
}

TEST(ProjectVertical, SingularAndBehindCamera) {
  // Pitched up 45 degrees from 20 m: a ground point 1 m ahead is behind
  // the image plane.
  auto cam = make_camera(45.0 * kDeg, 60.0 * kDeg, 20.0, 640.0, 512.0);
  EXPECT_THROW(project_vertical(cam, GroundObject{1.0, 0.0, 1.0}), GeometryError);
  // Depth exactly equal to h tan(pitch) puts the ground point in the plane.
  cam = make_camera(45.0 * kDeg, 60.0 * kDeg, 1.0, 640.0, 512.0);
  try {
    project_vertical(cam, GroundObject{std::tan(45.0 * kDeg), 0.0, 0.5});
    FAIL() << "expected a singular configuration";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::Singular);
  }
}

TEST(DepthFromBottom, LevelCamera) {
  const auto cam = level_camera();
  EXPECT_NEAR(depth_from_bottom(cam, 356.0 / 512.0), 8.0, 1e-12);
}

TEST(DepthFromBottom, HorizonIsDegenerate) {
  const auto cam = pitched_camera();
  try {
    depth_from_bottom(cam, horizon_from_pitch(cam).v0);
    FAIL() << "expected a horizon-degenerate error";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::HorizonDegenerate);
  }
}

TEST(DepthFromBottom, PitchedRoundTrip) {
  const auto cam = pitched_camera();
  const auto span = project_vertical(cam, GroundObject{10.0, 0.0, 1.7});
  EXPECT_NEAR(depth_from_bottom(cam, span.v_bottom), 10.0, 1e-9);
}

TEST(DepthFromBottom, LinearInCameraHeight) {
  auto cam = pitched_camera();
  const double z = depth_from_bottom(cam, 0.9);
  cam.cam_height_m *= 3.0;
  EXPECT_NEAR(depth_from_bottom(cam, 0.9), 3.0 * z, 1e-12 * z);
}

TEST(HeightFromBox, ExactLevel) {
  const auto cam = level_camera();
  EXPECT_NEAR(height_from_box_exact(cam, {249.75 / 512.0, 356.0 / 512.0}), 1.7, 1e-12);
  EXPECT_DOUBLE_EQ(height_from_box_exact(cam, {0.7, 0.7}), 0.0);
}

TEST(HeightFromBox, ExactPitchedRoundTrip) {
  const auto cam = pitched_camera();
  const auto span = project_vertical(cam, GroundObject{10.0, 0.0, 1.7});
  EXPECT_NEAR(height_from_box_exact(cam, span), 1.7, 1e-9);
}

TEST(HeightFromBox, HoiemMatchesExactWhenLevel) {
  const auto cam = level_camera();
  const ImageVerticalSpan span{249.75 / 512.0, 356.0 / 512.0};
  const double v0 = horizon_from_pitch(cam).v0;
  const double hoiem = height_from_box_hoiem(1.6, v0, span);
  EXPECT_NEAR(hoiem, 1.7, 1e-12);
  EXPECT_NEAR(hoiem, height_from_box_exact(cam, span), 1e-12 * hoiem);
  EXPECT_DOUBLE_EQ(height_from_box_hoiem(1.6, v0, {0.8, 0.8}), 0.0);
}

TEST(HeightFromBox, HoiemGapUnderPitch) {
  const auto cam = pitched_camera();
  const auto span = project_vertical(cam, GroundObject{10.0, 0.0, 1.7});
  const double hoiem = height_from_box_hoiem(2.0, horizon_from_pitch(cam).v0, span);
  // Frozen from direct evaluation of the rigid-camera projection.
  EXPECT_NEAR(hoiem, 1.7137761480463012, 1e-9);
  EXPECT_GT(std::abs(hoiem - height_from_box_exact(cam, span)), 1e-3);
}

TEST(HeightFromBox, HoiemRejectsHorizonBottom) {
  EXPECT_THROW(height_from_box_hoiem(1.6, 0.6, {0.5, 0.6}), GeometryError);
}

TEST(Oracle, AxisAlignedPoint) {
  const auto cam = level_camera();
  const auto uv = projection_oracle(cam, Vector3<double>(0.0, 0.0, 8.0));
  EXPECT_NEAR(uv.y(), 256.0 + 500.0 * 1.6 / 8.0, 1e-9);
  EXPECT_NEAR(uv.x(), 320.0, 1e-9);
}

TEST(Oracle, BehindCamera) {
  const auto cam = level_camera();
  EXPECT_THROW(projection_oracle(cam, Vector3<double>(0.0, 0.0, -2.0)), GeometryError);
}

// Properties over random valid configurations.

TEST(Properties, OracleEquivalenceAndRoundTrips) {
  testing_oracles::ConfigSampler sampler(11);
  for (int k = 0; k < 20000; ++k) {
    const auto s = sampler.next();
    const auto span = project_vertical(s.camera, s.object);
    const auto top = projection_oracle(s.camera, Vector3<double>(0, s.object.height_m, s.object.depth_m));
    const auto bottom = projection_oracle(s.camera, Vector3<double>(0, 0, s.object.depth_m));
    const double h_im = s.camera.image_h_px;
    ASSERT_NEAR(span.v_top * h_im, top.y(), 1e-9 * h_im);
    ASSERT_NEAR(span.v_bottom * h_im, bottom.y(), 1e-9 * h_im);
    ASSERT_NEAR(height_from_box_exact(s.camera, span), s.object.height_m,
                1e-9 * s.object.height_m);
    ASSERT_NEAR(depth_from_bottom(s.camera, span.v_bottom), s.object.depth_m,
                1e-9 * s.object.depth_m);
  }
}

TEST(Properties, ScaleFamilyLeavesSpansFixed) {
  testing_oracles::ConfigSampler sampler(12);
  for (int k = 0; k < 2000; ++k) {
    const auto s = sampler.next();
    for (double lambda : {0.5, 2.0, 7.3}) {
      auto cam = s.camera;
      auto obj = s.object;
      cam.cam_height_m *= lambda;
      obj.depth_m *= lambda;
      obj.height_m *= lambda;
      const auto a = project_vertical(s.camera, s.object);
      const auto b = project_vertical(cam, obj);
      ASSERT_NEAR(a.v_top, b.v_top, 1e-9);
      ASSERT_NEAR(a.v_bottom, b.v_bottom, 1e-9);
    }
  }
}

TEST(Properties, BottomMovesDownAsObjectApproaches) {
  testing_oracles::ConfigSampler sampler(13);
  for (int k = 0; k < 500; ++k) {
    const auto s = sampler.next();
    auto nearer = s.object;
    nearer.depth_m *= 0.9;
    try {
      const double v_far = project_vertical(s.camera, s.object).v_bottom;
      const double v_near = project_vertical(s.camera, nearer).v_bottom;
      ASSERT_GT(v_near, v_far);
    } catch (const GeometryError&) {
      // Nearer point left the visible half-space.
    }
  }
}

TEST(Properties, HoiemCoincidesAtZeroPitch) {
  testing_oracles::ConfigSampler sampler(14);
  for (int k = 0; k < 2000; ++k) {
    auto s = sampler.next();
    s.camera.pitch_rad = 0.0;
    const auto span = project_vertical(s.camera, s.object);
    const double exact = height_from_box_exact(s.camera, span);
    const double hoiem =
        height_from_box_hoiem(s.camera.cam_height_m, horizon_from_pitch(s.camera).v0, span);
    ASSERT_NEAR(hoiem, exact, 1e-12 * exact);
  }
}

TEST(Templated, FloatScalarInstantiates) {
  const auto cam = make_camera(0.1f, 1.0f, 1.5f, 640.0f, 480.0f);
  const auto span = project_vertical(cam, BasicGroundObject<float>{6.0f, 0.0f, 1.7f});
  EXPECT_NEAR(height_from_box_exact(cam, span), 1.7f, 1e-4f);
}

}  // namespace
}  // namespace gscale
