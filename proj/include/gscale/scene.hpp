#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gscale/geometry.hpp"
#include "gscale/pose_prior.hpp"

namespace gscale {

/// Bad or unusable input: malformed documents, empty detection lists,
/// scenes with no usable box. Maps to CLI exit code 1.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// 2D detection in image-height-normalized coordinates, v growing downward.
struct DetectionBox {
  double u_left{0};
  double u_right{0};
  double v_top{0};
  double v_bottom{0};
  Category category{Category::Person};
  std::optional<KeypointSet> keypoints;
  double weight{1.0};

  ImageVerticalSpan span() const { return {v_top, v_bottom}; }
  double height() const { return v_bottom - v_top; }
  double width() const { return u_right - u_left; }

  bool operator==(const DetectionBox&) const = default;
};

/// Throws InputError when a box violates its ordering or weight invariants.
void validate(const DetectionBox& box);

/// Everything the solvers see of an image: horizon, field of view and boxes.
struct SceneInput {
  double v0{0.5};
  double fov_rad{1.0};
  double principal_v{0.5};
  std::vector<DetectionBox> boxes;
};

struct Exclusion {
  std::size_t index{0};
  std::string reason;

  bool operator==(const Exclusion&) const = default;
};

/// One row of the refinement trace. Per-object vectors follow
/// SceneEstimate::object_indices.
struct LayerState {
  double cam_height_m{0};
  std::vector<double> heights_m;
  std::vector<double> v_top;
  /// Signed v_top_det - v_top per object.
  std::vector<double> residuals;
  double reprojection_loss{0};
  double prior_loss{0};
  double total_loss{0};

  bool operator==(const LayerState&) const = default;
};

struct SceneEstimate {
  std::string method;
  double cam_height_m{0};
  std::vector<double> heights_m;
  /// Input index of each estimated object; excluded boxes are absent.
  std::vector<std::size_t> object_indices;
  std::vector<LayerState> layers;
  std::vector<Exclusion> excluded;
  bool converged{true};
  bool ill_posed{false};
  int iterations{0};

  bool operator==(const SceneEstimate&) const = default;
};

struct GroundTruth {
  double cam_height_m{0};
  std::vector<double> heights_m;

  bool operator==(const GroundTruth&) const = default;
};

inline constexpr double kHorizonMargin = 1e-6;

/// Weighted lower median: the smallest value whose cumulative weight
/// reaches half the total. Ties in value are irrelevant to the result.
double weighted_median(std::vector<double> values, std::vector<double> weights);

}  // namespace gscale
