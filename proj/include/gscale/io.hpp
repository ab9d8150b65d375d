#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gscale/scene.hpp"
#include "gscale/synth.hpp"

namespace gscale {

inline constexpr int kSchemaVersion = 1;

/// Malformed or schema-violating document. The message starts with the
/// offending field path, e.g. "detections[2].v_top: expected a number".
class SchemaError : public InputError {
public:
  using InputError::InputError;
};

/// Either a horizon row or a pitch; the field of view is always present.
struct Calibration {
  double fov_rad{1.0};
  std::optional<double> v0;
  std::optional<double> pitch_rad;
  std::optional<double> principal_v;

  bool operator==(const Calibration&) const = default;
};

/// Detection input in canonical form: coordinates normalized by image
/// height, v growing downward. Parsing converts other axis conventions and
/// pixel units into this form.
struct DetectionDocument {
  double image_w_px{0};
  double image_h_px{0};
  Calibration calibration;
  std::vector<DetectionBox> detections;
  std::optional<GroundTruth> ground_truth;
  /// Generator state for synthetic documents.
  std::optional<SceneSpec> scene;

  /// Horizon row implied by the calibration (v-down, normalized).
  double horizon() const;
  double principal_v() const { return calibration.principal_v.value_or(0.5); }
  SceneInput scene_input() const;

  bool operator==(const DetectionDocument&) const = default;
};

DetectionDocument parse_document(std::string_view json_text);
std::string emit_document(const DetectionDocument& doc);

struct ResultsDocument {
  SceneEstimate estimate;
  /// "fnv1a64:" followed by 16 lowercase hex digits.
  std::string config_hash;

  bool operator==(const ResultsDocument&) const = default;
};

ResultsDocument parse_results(std::string_view json_text);
std::string emit_results(const ResultsDocument& results);

/// 64-bit FNV-1a of `bytes` formatted as "fnv1a64:%016x".
std::string fnv1a64_tag(std::string_view bytes);

// --------------------------------------------------------------------------
// Filtering

struct FilterThresholds {
  /// Person box height / width.
  double person_aspect_min{1.2};
  double person_aspect_max{6.0};
  /// Box height as a fraction of image height.
  double box_height_min{0.05};
  double box_height_max{0.95};
  /// Persons with keypoints must show a head keypoint and an ankle.
  bool require_amodal{true};

  bool operator==(const FilterThresholds&) const = default;
};

struct Rejection {
  std::size_t index{0};
  /// "amodal", "aspect", "box-height" or "above-horizon".
  std::string reason;

  bool operator==(const Rejection&) const = default;
};

struct FilterResult {
  std::vector<DetectionBox> kept;
  /// Input index of each kept box, increasing.
  std::vector<std::size_t> kept_indices;
  std::vector<Rejection> rejected;
};

/// First failing rule wins, checked in the order amodal, aspect,
/// box-height, above-horizon.
FilterResult filter_detections(const std::vector<DetectionBox>& boxes, double v0,
                               const FilterThresholds& thresholds);

// --------------------------------------------------------------------------
// Overlay

struct OverlayOptions {
  double reference_height_m{1.0};
  double reference_width_m{0.5};

  bool operator==(const OverlayOptions&) const = default;
};

/// SVG 1.1 drawing in pixel coordinates of the document's image: frame,
/// horizon, detected boxes, reprojected boxes of the final layer, and one
/// reference rectangle of the configured metric size beside each estimated
/// object at that object's depth. Coordinates are printed with six decimals.
std::string emit_overlay(const DetectionDocument& doc, const SceneEstimate& estimate,
                         const OverlayOptions& options = {});

}  // namespace gscale
