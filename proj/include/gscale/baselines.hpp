#pragma once

#include <span>

#include "gscale/pose_prior.hpp"
#include "gscale/scene.hpp"

namespace gscale {

/// Settings of the free-height graphical-model baseline.
struct PgmOptions {
  /// Gaussian prior on camera height.
  double cam_height_mu{1.6};
  double cam_height_sigma{0.5};
  int max_iterations{100};
  /// Stop when the negative log posterior changes by less than this.
  double tolerance{1e-10};
  double cam_height_min{0.1};
  double cam_height_max{50.0};

  bool operator==(const PgmOptions&) const = default;
};

/// Throws std::invalid_argument on a non-positive sigma, a non-finite mean,
/// unordered bounds or a negative iteration cap.
void validate(const PgmOptions& options);

/// Both baselines use the linear height model
///
///   h_obj / h_cam = (v_b - v_t) / (v_b - v0),
///
/// so a layer's tops are v_t = v_b - (h_obj / h_cam) (v_b - v0). Layer
/// losses: reprojection_loss is the mean |v_t_det - v_t|; prior_loss is the
/// mean over objects of 0.5 ((h_obj - mu) / sigma)^2, plus the camera-height
/// term divided by N for pgm_full; total_loss is their sum.

/// Camera height from the weighted median of per-object votes with every
/// object at its category mean; heights stay at the means. Only the means
/// of `canonical` are read. Method name "pgm-fixed".
SceneEstimate pgm_fixed_height(double v0, std::span<const DetectionBox> boxes,
                               const PriorTable& canonical, double cam_height_min = 0.1,
                               double cam_height_max = 50.0);

/// MAP camera height under Gaussian object priors and a Gaussian camera
/// prior, with each object height tied to the camera height by the linear
/// model. Alternates the height update h_i = h_cam k_i with the closed-form
/// camera update until the posterior stops changing. Reported tops match
/// the detections, so reprojection loss is zero up to rounding.
/// Flags ill_posed when the objects carry no scale information (all object
/// precisions negligible next to the camera prior). Method name "pgm".
SceneEstimate pgm_full(double v0, std::span<const DetectionBox> boxes, const PriorTable& priors,
                       const PgmOptions& options = {});

}  // namespace gscale
