#include "gscale/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <numbers>
#include <stdexcept>

namespace gscale {

double SceneRng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SceneRng::normal(double mean, double sigma) {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return mean + sigma * std::sqrt(-2.0 * std::log(1.0 - u1)) *
                    std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

constexpr int kMaxAttempts = 1000;
constexpr int kMaxObjectAttempts = 1000;
constexpr int kMaxNoiseRetries = 100;
constexpr std::uint64_t kNoiseStream = 0x9E3779B97F4A7C15ull;

struct BoxPx {
  double u_left, u_right, v_top, v_bottom;
};

BoxPx project_box(const CameraParams& cam, const GroundObject& obj) {
  BoxPx box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double dx : {-0.5, 0.5}) {
    for (double y : {0.0, obj.height_m}) {
      const auto uv = projection_oracle(
          cam, Vector3<double>(obj.lateral_m + dx * obj.width_m, y, obj.depth_m));
      box.u_left = std::min(box.u_left, uv.x());
      box.u_right = std::max(box.u_right, uv.x());
      box.v_top = std::min(box.v_top, uv.y());
      box.v_bottom = std::max(box.v_bottom, uv.y());
    }
  }
  return box;
}

double sample_height(SceneRng& rng, const CategoryPrior& prior, const SceneRanges& ranges,
                     const NoiseModel& noise) {
  if (noise.height_outlier_rate > 0 && rng.uniform01() < noise.height_outlier_rate)
    return rng.uniform(0.5 * prior.mu_m, 1.5 * prior.mu_m);
  switch (ranges.height_mode) {
    case HeightMode::PriorMean:
      return prior.mu_m;
    case HeightMode::Offset: {
      const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      return prior.mu_m + sign * ranges.offset_sigmas * prior.sigma_m;
    }
    case HeightMode::Sampled:
      break;
  }
  for (;;) {
    const double h = rng.normal(prior.mu_m, prior.sigma_m);
    if (h > 0.1) return h;
  }
}

}  // namespace

SceneSpec sample_scene(const SceneRanges& ranges, int n_objects, std::uint64_t seed,
                       const NoiseModel& noise, const PriorTable& priors) {
  if (n_objects < 1) throw InputError("a scene needs at least one object");
  if (!(ranges.pitch_min_rad <= ranges.pitch_max_rad && ranges.fov_min_rad <= ranges.fov_max_rad &&
        ranges.cam_height_min_m <= ranges.cam_height_max_m &&
        ranges.depth_min_m <= ranges.depth_max_m && ranges.depth_min_m > 0 &&
        ranges.cam_height_min_m > 0))
    throw InputError("scene ranges must be ordered and positive");

  SceneRng rng(seed);
  SceneSpec scene;
  scene.seed = seed;

  // Redraw the camera until visible ground meets the depth range and every
  // object fits in frame.
  for (int cam_attempt = 0; cam_attempt < kMaxAttempts; ++cam_attempt) {
    const double pitch = rng.uniform(ranges.pitch_min_rad, ranges.pitch_max_rad);
    const double fov = rng.uniform(ranges.fov_min_rad, ranges.fov_max_rad);
    const double h_cam = rng.uniform(ranges.cam_height_min_m, ranges.cam_height_max_m);
    scene.camera = make_camera(pitch, fov, h_cam, ranges.image_w_px, ranges.image_h_px);
    scene.objects.clear();
    const auto& cam = scene.camera;
    const double v0 = horizon_from_pitch(cam).v0;
    if (v0 > ranges.max_horizon) continue;
    const double v_far = std::max(v0 + ranges.min_horizon_gap, 0.0);
    const double z_near =
        std::max(ranges.depth_min_m, v0 < 1.0 ? depth_from_bottom(cam, 1.0) : 0.0);
    const double z_far = std::min(ranges.depth_max_m, depth_from_bottom(cam, v_far));
    if (!(z_far > 1.05 * z_near)) continue;

    const double v0_px = v0 * cam.image_h_px;
    const double c = std::cos(cam.pitch_rad), s = std::sin(cam.pitch_rad);
    bool all_placed = true;
    for (int k = 0; k < n_objects && all_placed; ++k) {
      GroundObject obj;
      obj.category = rng.uniform01() < ranges.person_fraction ? Category::Person : Category::Car;
      obj.width_m = obj.category == Category::Person ? ranges.person_width_m : ranges.car_width_m;
      obj.height_m = sample_height(rng, priors.get(obj.category), ranges, noise);
      bool placed = false;
      for (int attempt = 0; attempt < kMaxObjectAttempts && !placed; ++attempt) {
        obj.depth_m = rng.uniform(z_near, z_far);
        const double u_center = rng.uniform(0.05, 0.95) * cam.image_w_px;
        const double optical_depth = obj.depth_m * c - cam.cam_height_m * s;
        if (optical_depth <= 1e-3) continue;
        obj.lateral_m = (u_center - cam.principal_u_px()) * optical_depth / cam.focal_px;

        // Both top corners must also sit in front of the camera.
        const double top_depth = obj.depth_m * c - (cam.cam_height_m - obj.height_m) * s;
        if (top_depth <= 1e-3) continue;

        const BoxPx box = project_box(cam, obj);
        placed = box.u_left >= 0 && box.u_right <= cam.image_w_px && box.v_top >= 0 &&
                 box.v_bottom <= cam.image_h_px &&
                 box.v_bottom - v0_px >= ranges.min_horizon_gap * cam.image_h_px;
        if (placed) scene.objects.push_back(obj);
      }
      all_placed = placed;
    }
    if (all_placed) return scene;
  }
  throw InputError(
      "scene ranges are infeasible: no camera within the attempt cap fits all objects in frame");
}

Observation render_detections(const SceneSpec& scene, const NoiseModel& noise) {
  const auto& cam = scene.camera;
  const double h_im = cam.image_h_px;
  SceneRng rng(scene.seed ^ kNoiseStream);

  Observation obs;
  obs.image_w_px = cam.image_w_px;
  obs.image_h_px = h_im;
  obs.principal_v = cam.principal_v_px / h_im;
  obs.v0 = horizon_from_pitch(cam).v0;
  obs.fov_rad = cam.fov_rad;
  if (noise.horizon_sigma > 0) obs.v0 = rng.normal(obs.v0, noise.horizon_sigma);
  if (noise.fov_sigma_rad > 0) {
    obs.fov_rad = std::clamp(rng.normal(obs.fov_rad, noise.fov_sigma_rad), 1e-3,
                             std::numbers::pi - 1e-3);
  }

  for (const auto& obj : scene.objects) {
    const BoxPx px = project_box(cam, obj);
    DetectionBox box;
    box.u_left = px.u_left / h_im;
    box.u_right = px.u_right / h_im;
    box.v_top = px.v_top / h_im;
    box.v_bottom = px.v_bottom / h_im;
    box.category = obj.category;
    if (noise.box_sigma > 0) {
      for (int retry = 0; retry < kMaxNoiseRetries; ++retry) {
        DetectionBox noisy = box;
        noisy.u_left = rng.normal(box.u_left, noise.box_sigma);
        noisy.u_right = rng.normal(box.u_right, noise.box_sigma);
        noisy.v_top = rng.normal(box.v_top, noise.box_sigma);
        noisy.v_bottom = rng.normal(box.v_bottom, noise.box_sigma);
        if (noisy.u_left < noisy.u_right && noisy.v_top < noisy.v_bottom) {
          box = noisy;
          break;
        }
      }
    }
    obs.boxes.push_back(box);
  }
  return obs;
}

GroundTruth ground_truth(const SceneSpec& scene) {
  GroundTruth gt;
  gt.cam_height_m = scene.camera.cam_height_m;
  for (const auto& obj : scene.objects) gt.heights_m.push_back(obj.height_m);
  return gt;
}

}  // namespace gscale
