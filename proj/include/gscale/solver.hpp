#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "gscale/geometry.hpp"
#include "gscale/pose_prior.hpp"
#include "gscale/scene.hpp"

namespace gscale {

/// Per-object input of the camera-height initializer:
/// [v0, u_l, u_r, v_t, v_b, v_t - v0, v_b - v0, h_obj].
using InitFeatures = Eigen::Matrix<double, 8, 1>;

/// Per-object input of a refinement layer:
/// [v0, u_l, u_r, v_t_prev, v_b, v_t_prev - v_t_det, h_obj_prev, h_cam_prev].
using RefineFeatures = Eigen::Matrix<double, 8, 1>;

struct RefinementConfig {
  int num_layers{3};
  double alpha_reprojection{1.0};
  double alpha_prior{0.1};
  double damping{1e-3};
  int max_backtracks{20};
  double tolerance{1e-10};
  PriorMode prior_mode{PriorMode::LogDensity};
  double cam_height_min{0.1};
  double cam_height_max{50.0};
  double height_min{0.1};
  double height_max{10.0};
  /// Apply the prior to upright height when a person carries keypoints.
  bool use_upright_ratio{true};
  double head_extension{kDefaultHeadExtension};

  bool operator==(const RefinementConfig&) const = default;
};

/// Throws std::invalid_argument on negative weights, M < 0 or unordered bounds.
void validate(const RefinementConfig& config);

std::vector<InitFeatures> assemble_init_features(double v0,
                                                 std::span<const DetectionBox> boxes,
                                                 std::span<const double> prior_means);

std::vector<RefineFeatures> assemble_refine_features(double v0,
                                                     std::span<const DetectionBox> boxes,
                                                     std::span<const double> v_top_prev,
                                                     std::span<const double> heights_prev,
                                                     double cam_height_prev);

/// Robust camera height from per-object votes of the linear height model,
/// each object assumed at its expected (actual) height. Votes from boxes on
/// or above the horizon are skipped. Returns the weighted median clamped to
/// [min_height, max_height]; throws InputError if no box can vote.
double init_camera_height(double v0, std::span<const DetectionBox> boxes,
                          std::span<const double> expected_heights,
                          double min_height = 0.1, double max_height = 50.0);

/// Convenience overload taking category priors (means, no upright correction).
double init_camera_height(double v0, std::span<const DetectionBox> boxes,
                          const PriorTable& priors, double min_height = 0.1,
                          double max_height = 50.0);

struct ReprojectionResult {
  std::vector<double> v_top;
  /// Signed v_top_det - v_top; NaN for excluded objects.
  std::vector<double> residuals;
  std::vector<bool> excluded;
  double loss{0};
};

/// Reprojects each box's top with depth pinned to its detected bottom.
/// `camera` must be expressed with image_h_px = 1 (normalized units).
/// Boxes on the horizon are flagged and left out of the mean.
ReprojectionResult reprojection_loss(const CameraParams& camera,
                                     std::span<const double> heights,
                                     std::span<const DetectionBox> boxes);

struct SolverState {
  double cam_height_m{0};
  Eigen::VectorXd heights_m;
};

/// The scale-estimation objective over usable boxes of one scene.
///
/// Parameters are x = [h_cam, h_1 .. h_N]. The loss is
///   alpha_1 * mean_i |v_t_det_i - v_t_i| + alpha_2 * mean_i prior(h_i / r_i)
/// where r_i is the upright ratio (1 without keypoints).
class ScaleProblem {
public:
  ScaleProblem(const SceneInput& input, const PriorTable& priors,
               const RefinementConfig& config);

  Eigen::Index size() const { return static_cast<Eigen::Index>(objects_.size()); }
  const std::vector<std::size_t>& object_indices() const { return indices_; }
  const std::vector<Exclusion>& excluded() const { return excluded_; }
  const RefinementConfig& config() const { return config_; }

  /// Normalized camera (image_h_px = 1) at the given camera height.
  CameraParams camera(double cam_height_m) const;

  double v_top(const SolverState& s, Eigen::Index i) const;
  Eigen::VectorXd v_tops(const SolverState& s) const;
  Eigen::VectorXd residuals(const SolverState& s) const;
  /// d residual_i / d x, N x (N + 1).
  Eigen::MatrixXd jacobian(const SolverState& s) const;

  double reprojection_loss(const SolverState& s) const;
  double prior_loss(const SolverState& s) const;
  /// +inf when some top reprojects through the camera plane.
  double total_loss(const SolverState& s) const;
  /// d total_loss / d x. Undefined where a residual is exactly zero.
  Eigen::VectorXd gradient(const SolverState& s) const;

  /// Prior term of object i and its derivatives w.r.t. the actual height.
  PriorTerm prior_term_at(const SolverState& s, Eigen::Index i) const;

  /// Expected actual heights: prior mean times upright ratio.
  Eigen::VectorXd expected_heights() const;
  std::span<const double> upright_ratios() const { return ratios_; }
  std::span<const DetectionBox> boxes() const { return objects_; }

  SolverState clamp(SolverState s) const;
  LayerState snapshot(const SolverState& s) const;

  double v0() const { return v0_; }

private:
  double focal_{0};
  double tan_pitch_{0};
  double principal_v_{0.5};
  double v0_{0.5};
  double fov_{1.0};
  RefinementConfig config_;
  std::vector<DetectionBox> objects_;
  std::vector<std::size_t> indices_;
  std::vector<CategoryPrior> priors_;
  std::vector<double> ratios_;
  /// depth_i / h_cam, fixed by the detected bottom.
  std::vector<double> depth_factor_;
  std::vector<Exclusion> excluded_;
};

double total_loss(const ScaleProblem& problem, const SolverState& state);

/// One damped Gauss-Newton step with backtracking. The L1 reprojection
/// term enters through its iteratively reweighted quadratic majorizer.
/// Never increases total_loss; returns the input state if no descent is
/// found within the backtracking budget.
SolverState refine_layer(const ScaleProblem& problem, const SolverState& state);

/// Initialization followed by config.num_layers refinement layers.
SceneEstimate solve_scene(const SceneInput& input, const PriorTable& priors,
                          const RefinementConfig& config);

}  // namespace gscale
