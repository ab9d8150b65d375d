#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gscale/scene.hpp"

namespace gscale {

/// mean / population std / lower-middle median.
struct Summary {
  double mean{0};
  double std{0};
  double median{0};

  bool operator==(const Summary&) const = default;
};

/// Throws std::invalid_argument on an empty sample.
Summary summarize(std::span<const double> samples);

struct MetricReport {
  /// |h_cam - h_cam_gt|.
  double e_hcam{0};
  /// Per estimated object |h_obj - h_obj_gt|, empty when the truth has no heights.
  std::vector<double> e_hobj;
  std::optional<double> e_hobj_mean;
  /// Per estimated object |v_t_det - v_t| from the final layer.
  std::vector<double> abs_residuals;
  double lvt{0};

  bool operator==(const MetricReport&) const = default;
};

/// Objects correspond through estimate.object_indices into truth.heights_m.
/// When `upright_ratios` is given (one per estimated object), estimated
/// actual heights are divided by it before comparison with upright truth.
/// Throws std::invalid_argument on a correspondence mismatch.
MetricReport compute_metrics(const SceneEstimate& estimate, const GroundTruth& truth,
                             std::optional<std::span<const double>> upright_ratios = {});

/// (threshold, fraction of residuals <= threshold) per threshold, in input
/// order. Throws std::invalid_argument on empty residuals.
std::vector<std::pair<double, double>> threshold_curve(std::span<const double> residuals,
                                                       std::span<const double> thresholds);

struct AggregateReport {
  std::size_t scenes{0};
  Summary e_hcam;
  /// Over per-scene E_hobj means; absent if no scene had truth heights.
  std::optional<Summary> e_hobj;
  /// Over all objects' absolute residuals pooled.
  Summary lvt;

  bool operator==(const AggregateReport&) const = default;
};

AggregateReport aggregate(std::span<const MetricReport> reports);

}  // namespace gscale
