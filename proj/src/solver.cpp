#include "gscale/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace gscale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
/// Floor on |r| in the reweighted L1 majorizer.
constexpr double kResidualFloor = 1e-10;

double sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

void validate(const RefinementConfig& c) {
  if (c.num_layers < 0) throw std::invalid_argument("num_layers must be >= 0");
  if (!(c.alpha_reprojection >= 0) || !(c.alpha_prior >= 0))
    throw std::invalid_argument("loss weights must be >= 0");
  if (!(c.damping >= 0)) throw std::invalid_argument("damping must be >= 0");
  if (c.max_backtracks < 0) throw std::invalid_argument("max_backtracks must be >= 0");
  if (!(c.cam_height_min > 0 && c.cam_height_min < c.cam_height_max))
    throw std::invalid_argument("camera height bounds must satisfy 0 < min < max");
  if (!(c.height_min > 0 && c.height_min < c.height_max))
    throw std::invalid_argument("object height bounds must satisfy 0 < min < max");
  if (!(c.head_extension >= 0 && c.head_extension < 1))
    throw std::invalid_argument("head_extension must lie in [0, 1)");
}

// --------------------------------------------------------------------------
// Feature vectors

std::vector<InitFeatures> assemble_init_features(double v0,
                                                 std::span<const DetectionBox> boxes,
                                                 std::span<const double> prior_means) {
  if (boxes.empty()) throw InputError("no detections to assemble features from");
  if (prior_means.size() != boxes.size())
    throw std::invalid_argument("one prior mean per box is required");
  std::vector<InitFeatures> out;
  out.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    InitFeatures g;
    g << v0, b.u_left, b.u_right, b.v_top, b.v_bottom, b.v_top - v0, b.v_bottom - v0,
        prior_means[i];
    out.push_back(g);
  }
  return out;
}

std::vector<RefineFeatures> assemble_refine_features(double v0,
                                                     std::span<const DetectionBox> boxes,
                                                     std::span<const double> v_top_prev,
                                                     std::span<const double> heights_prev,
                                                     double cam_height_prev) {
  if (v_top_prev.size() != boxes.size() || heights_prev.size() != boxes.size())
    throw std::invalid_argument("refine features need one entry per box");
  std::vector<RefineFeatures> out;
  out.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    RefineFeatures g;
    g << v0, b.u_left, b.u_right, v_top_prev[i], b.v_bottom, v_top_prev[i] - b.v_top,
        heights_prev[i], cam_height_prev;
    out.push_back(g);
  }
  return out;
}

// --------------------------------------------------------------------------
// Initialization

double init_camera_height(double v0, std::span<const DetectionBox> boxes,
                          std::span<const double> expected_heights, double min_height,
                          double max_height) {
  if (boxes.empty()) throw InputError("no detections for camera height initialization");
  if (expected_heights.size() != boxes.size())
    throw std::invalid_argument("one expected height per box is required");
  std::vector<double> votes, weights;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double below_horizon = b.v_bottom - v0;
    const double extent = b.v_bottom - b.v_top;
    if (!(below_horizon > kHorizonMargin) || !(extent > kSingularEps)) continue;
    votes.push_back(expected_heights[i] * below_horizon / extent);
    weights.push_back(b.weight);
  }
  if (votes.empty())
    throw InputError("every detection is degenerate (on or above the horizon, or zero height)");
  return std::clamp(weighted_median(std::move(votes), std::move(weights)), min_height,
                    max_height);
}

double init_camera_height(double v0, std::span<const DetectionBox> boxes,
                          const PriorTable& priors, double min_height, double max_height) {
  std::vector<double> means;
  means.reserve(boxes.size());
  for (const auto& b : boxes) means.push_back(priors.get(b.category).mu_m);
  return init_camera_height(v0, boxes, means, min_height, max_height);
}

// --------------------------------------------------------------------------
// Reprojection

ReprojectionResult reprojection_loss(const CameraParams& camera,
                                     std::span<const double> heights,
                                     std::span<const DetectionBox> boxes) {
  if (heights.size() != boxes.size())
    throw std::invalid_argument("one height per box is required");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ReprojectionResult out;
  out.v_top.assign(boxes.size(), nan);
  out.residuals.assign(boxes.size(), nan);
  out.excluded.assign(boxes.size(), false);
  double sum = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    try {
      GroundObject obj;
      obj.depth_m = depth_from_bottom(camera, boxes[i].v_bottom);
      obj.height_m = heights[i];
      const auto span = project_vertical(camera, obj);
      out.v_top[i] = span.v_top;
      out.residuals[i] = boxes[i].v_top - span.v_top;
      sum += std::abs(out.residuals[i]);
      ++used;
    } catch (const GeometryError&) {
      out.excluded[i] = true;
    }
  }
  out.loss = used > 0 ? sum / used : 0.0;
  return out;
}

// --------------------------------------------------------------------------
// ScaleProblem

ScaleProblem::ScaleProblem(const SceneInput& input, const PriorTable& priors,
                           const RefinementConfig& config)
    : config_(config) {
  validate(config);
  if (input.boxes.empty()) throw InputError("scene has no detections");
  if (!std::isfinite(input.v0)) throw InputError("horizon must be finite");
  try {
    focal_ = focal_from_fov(input.fov_rad, 1.0);
  } catch (const GeometryError& e) {
    throw InputError(e.what());
  }
  principal_v_ = input.principal_v;
  v0_ = input.v0;
  fov_ = input.fov_rad;
  tan_pitch_ = (v0_ - principal_v_) / focal_;

  for (std::size_t i = 0; i < input.boxes.size(); ++i) {
    const auto& b = input.boxes[i];
    validate(b);
    const double gap = b.v_bottom - v0_;
    if (std::abs(gap) <= kHorizonMargin) {
      excluded_.push_back({i, "horizon-degenerate"});
      continue;
    }
    if (gap < 0) {
      excluded_.push_back({i, "above-horizon"});
      continue;
    }
    const double g = (focal_ + (b.v_bottom - principal_v_) * tan_pitch_) / gap;
    if (!(g > 0)) {
      excluded_.push_back({i, "behind-camera"});
      continue;
    }
    if (!priors.has(b.category))
      throw InputError(std::string("no height prior configured for category '") +
                       to_string(b.category) + "'");
    double ratio = 1.0;
    if (config.use_upright_ratio && b.category == Category::Person && b.keypoints) {
      try {
        ratio = upright_ratio(*b.keypoints, config.head_extension).ratio;
      } catch (const std::invalid_argument&) {
        ratio = 1.0;
      }
    }
    objects_.push_back(b);
    indices_.push_back(i);
    priors_.push_back(priors.get(b.category));
    ratios_.push_back(ratio);
    depth_factor_.push_back(g);
  }
  if (objects_.empty()) throw InputError("no usable detections: every box is on or above the horizon");
}

CameraParams ScaleProblem::camera(double cam_height_m) const {
  CameraParams cam;
  cam.pitch_rad = std::atan(tan_pitch_);
  cam.fov_rad = fov_;
  cam.focal_px = focal_;
  cam.cam_height_m = cam_height_m;
  cam.image_h_px = 1.0;
  cam.image_w_px = 1.0;
  cam.principal_v_px = principal_v_;
  return cam;
}

double ScaleProblem::v_top(const SolverState& s, Eigen::Index i) const {
  const double h = s.cam_height_m;
  const double depth = h * depth_factor_[i];
  const double above = h - s.heights_m[i];
  const double den = depth - above * tan_pitch_;
  if (!(den > kSingularEps)) return kInf;
  return principal_v_ + focal_ * (above + depth * tan_pitch_) / den;
}

Eigen::VectorXd ScaleProblem::v_tops(const SolverState& s) const {
  Eigen::VectorXd v(size());
  for (Eigen::Index i = 0; i < size(); ++i) v[i] = v_top(s, i);
  return v;
}

Eigen::VectorXd ScaleProblem::residuals(const SolverState& s) const {
  Eigen::VectorXd r(size());
  for (Eigen::Index i = 0; i < size(); ++i) r[i] = objects_[i].v_top - v_top(s, i);
  return r;
}

Eigen::MatrixXd ScaleProblem::jacobian(const SolverState& s) const {
  const Eigen::Index n = size();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n + 1);
  const double h = s.cam_height_m;
  const double t = tan_pitch_;
  const double scale = focal_ * (1.0 + t * t);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = depth_factor_[i];
    const double depth = h * g;
    const double above = h - s.heights_m[i];
    const double den = depth - above * t;
    const double den2 = den * den;
    // Residual is v_det - v_top, hence the leading minus signs.
    J(i, 0) = -scale * (depth - above * g) / den2;
    J(i, i + 1) = scale * depth / den2;
  }
  return J;
}

double ScaleProblem::reprojection_loss(const SolverState& s) const {
  return residuals(s).cwiseAbs().mean();
}

double ScaleProblem::prior_loss(const SolverState& s) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i)
    sum += prior_term(s.heights_m[i] / ratios_[i], priors_[i], config_.prior_mode).value;
  return sum / static_cast<double>(size());
}

double ScaleProblem::total_loss(const SolverState& s) const {
  const double reproj = reprojection_loss(s);
  if (!std::isfinite(reproj)) return kInf;
  return config_.alpha_reprojection * reproj + config_.alpha_prior * prior_loss(s);
}

Eigen::VectorXd ScaleProblem::gradient(const SolverState& s) const {
  const Eigen::Index n = size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::VectorXd r = residuals(s);
  const Eigen::MatrixXd J = jacobian(s);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    g += (config_.alpha_reprojection * inv_n * sign(r[i])) * J.row(i).transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    g[i + 1] += config_.alpha_prior * inv_n * prior_term_at(s, i).gradient;
  }
  return g;
}

PriorTerm ScaleProblem::prior_term_at(const SolverState& s, Eigen::Index i) const {
  const double ratio = ratios_[i];
  auto term = prior_term(s.heights_m[i] / ratio, priors_[i], config_.prior_mode);
  term.gradient /= ratio;
  term.curvature /= ratio * ratio;
  return term;
}

Eigen::VectorXd ScaleProblem::expected_heights() const {
  Eigen::VectorXd h(size());
  for (Eigen::Index i = 0; i < size(); ++i) h[i] = priors_[i].mu_m * ratios_[i];
  return h;
}

SolverState ScaleProblem::clamp(SolverState s) const {
  s.cam_height_m = std::clamp(s.cam_height_m, config_.cam_height_min, config_.cam_height_max);
  s.heights_m = s.heights_m.cwiseMax(config_.height_min).cwiseMin(config_.height_max);
  return s;
}

LayerState ScaleProblem::snapshot(const SolverState& s) const {
  LayerState layer;
  layer.cam_height_m = s.cam_height_m;
  layer.heights_m.assign(s.heights_m.begin(), s.heights_m.end());
  const Eigen::VectorXd v = v_tops(s);
  layer.v_top.assign(v.begin(), v.end());
  const Eigen::VectorXd r = residuals(s);
  layer.residuals.assign(r.begin(), r.end());
  layer.reprojection_loss = reprojection_loss(s);
  layer.prior_loss = prior_loss(s);
  layer.total_loss = total_loss(s);
  return layer;
}

double total_loss(const ScaleProblem& problem, const SolverState& state) {
  return problem.total_loss(state);
}

// --------------------------------------------------------------------------
// Refinement

SolverState refine_layer(const ScaleProblem& problem, const SolverState& state) {
  const auto& cfg = problem.config();
  const Eigen::Index n = problem.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double f0 = problem.total_loss(state);

  // The features a learned layer would consume; the step below is built
  // from the same residual (slot 5) and current estimates.
  const auto boxes = problem.boxes();
  const Eigen::VectorXd v_prev = problem.v_tops(state);
  const auto features = assemble_refine_features(
      problem.v0(), boxes, std::span<const double>(v_prev.data(), n),
      std::span<const double>(state.heights_m.data(), n), state.cam_height_m);

  const Eigen::MatrixXd J = problem.jacobian(state);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = -features[i][5];
    const double w = cfg.alpha_reprojection * inv_n / std::max(std::abs(r), kResidualFloor);
    H.noalias() += w * J.row(i).transpose() * J.row(i);
    b.noalias() += (w * r) * J.row(i).transpose();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto term = problem.prior_term_at(state, i);
    H(i + 1, i + 1) += cfg.alpha_prior * inv_n * term.curvature;
    b[i + 1] += cfg.alpha_prior * inv_n * term.gradient;
  }

  Eigen::MatrixXd A = H;
  A.diagonal() += cfg.damping * H.diagonal() +
                  Eigen::VectorXd::Constant(n + 1, kSingularEps);
  const Eigen::VectorXd delta = -A.ldlt().solve(b);
  if (!delta.allFinite()) return state;

  double step = 1.0;
  for (int k = 0; k <= cfg.max_backtracks; ++k, step *= 0.5) {
    SolverState candidate;
    candidate.cam_height_m = state.cam_height_m + step * delta[0];
    candidate.heights_m = state.heights_m + step * delta.tail(n);
    candidate = problem.clamp(std::move(candidate));
    const double f1 = problem.total_loss(candidate);
    if (f1 < f0 || (!std::isfinite(f0) && std::isfinite(f1))) return candidate;
  }
  return state;
}

SceneEstimate solve_scene(const SceneInput& input, const PriorTable& priors,
                          const RefinementConfig& config) {
  const ScaleProblem problem(input, priors, config);
  const Eigen::VectorXd expected = problem.expected_heights();

  SolverState state;
  state.cam_height_m = init_camera_height(
      input.v0, problem.boxes(),
      std::span<const double>(expected.data(), expected.size()), config.cam_height_min,
      config.cam_height_max);
  state.heights_m = expected;
  state = problem.clamp(state);

  SceneEstimate est;
  est.method = "scalenet";
  est.object_indices = problem.object_indices();
  est.excluded = problem.excluded();
  est.layers.push_back(problem.snapshot(state));
  for (int j = 1; j <= config.num_layers; ++j) {
    state = refine_layer(problem, state);
    est.layers.push_back(problem.snapshot(state));
  }
  est.iterations = config.num_layers;
  if (est.layers.size() >= 2) {
    const double prev = est.layers[est.layers.size() - 2].total_loss;
    const double last = est.layers.back().total_loss;
    est.converged = prev - last < config.tolerance;
  }
  est.cam_height_m = state.cam_height_m;
  est.heights_m.assign(state.heights_m.begin(), state.heights_m.end());
  return est;
}

}  // namespace gscale
