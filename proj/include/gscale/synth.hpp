#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gscale/geometry.hpp"
#include "gscale/pose_prior.hpp"
#include "gscale/scene.hpp"

namespace gscale {

/// Portable random source for fixtures.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Transforms are spelled out here instead of using the standard
/// distributions, whose algorithms are implementation-defined:
///   uniform01 = (next >> 11) * 2^-53
///   normal    = sqrt(-2 ln(1 - u1)) * cos(2 pi u2), two fresh uniforms per draw
class SceneRng {
public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal(double mean, double sigma);
  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

enum class HeightMode {
  /// Draw from the category prior.
  Sampled,
  /// Every object exactly at its prior mean.
  PriorMean,
  /// mu +/- offset_sigmas * sigma with a fair random sign.
  Offset,
};

struct SceneRanges {
  double pitch_min_rad{-30.0 * std::numbers::pi / 180.0};
  double pitch_max_rad{30.0 * std::numbers::pi / 180.0};
  double fov_min_rad{30.0 * std::numbers::pi / 180.0};
  double fov_max_rad{100.0 * std::numbers::pi / 180.0};
  double cam_height_min_m{0.5};
  double cam_height_max_m{10.0};
  double depth_min_m{2.0};
  double depth_max_m{60.0};
  double image_w_px{640.0};
  double image_h_px{480.0};
  /// Cameras whose horizon falls below this normalized row are redrawn so
  /// that a band of ground stays visible.
  double max_horizon{0.85};
  /// Minimum normalized gap between an object's bottom and the horizon.
  double min_horizon_gap{0.01};
  /// Probability that an object is a person; the rest are cars.
  double person_fraction{1.0};
  HeightMode height_mode{HeightMode::Sampled};
  double offset_sigmas{2.0};
  double person_width_m{0.5};
  double car_width_m{1.8};
};

struct NoiseModel {
  /// Normalized std-dev added to each box coordinate.
  double box_sigma{0.0};
  double horizon_sigma{0.0};
  double fov_sigma_rad{0.0};
  /// Fraction of objects whose height is drawn uniform in [0.5 mu, 1.5 mu].
  double height_outlier_rate{0.0};
};

struct SceneSpec {
  CameraParams camera;
  std::vector<GroundObject> objects;
  std::uint64_t seed{0};

  bool operator==(const SceneSpec&) const = default;
};

/// What a detector and calibration network would report for a scene.
struct Observation {
  double v0{0.5};
  double fov_rad{1.0};
  double principal_v{0.5};
  double image_w_px{0};
  double image_h_px{0};
  std::vector<DetectionBox> boxes;

  SceneInput scene_input() const { return {v0, fov_rad, principal_v, boxes}; }
};

/// Deterministic for a fixed (ranges, n_objects, seed, noise). Throws
/// InputError for n_objects == 0. Category and height are drawn once per
/// object; depth and lateral position are resampled until the box fits in
/// frame (1000 attempts). A camera is redrawn when an object cannot be
/// placed; InputError after 1000 cameras.
SceneSpec sample_scene(const SceneRanges& ranges, int n_objects, std::uint64_t seed,
                       const NoiseModel& noise = {},
                       const PriorTable& priors = PriorTable{});

/// Projects every object through the camera, then perturbs. Noise uses a
/// stream derived from scene.seed, so rendering is deterministic too.
Observation render_detections(const SceneSpec& scene, const NoiseModel& noise = {});

GroundTruth ground_truth(const SceneSpec& scene);

}  // namespace gscale
