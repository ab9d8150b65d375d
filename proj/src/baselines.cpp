#include "gscale/baselines.hpp"

#include "gscale/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

namespace gscale {

namespace {

/// Usable boxes of a scene under the linear model.
struct LinearScene {
  std::vector<DetectionBox> boxes;
  std::vector<std::size_t> indices;
  std::vector<CategoryPrior> priors;
  /// k_i = (v_b - v_t) / (v_b - v0): object-to-camera height ratio.
  std::vector<double> ratio;
  std::vector<Exclusion> excluded;
};

LinearScene collect(double v0, std::span<const DetectionBox> boxes, const PriorTable& priors) {
  if (boxes.empty()) throw InputError("scene has no detections");
  if (!std::isfinite(v0)) throw InputError("horizon must be finite");
  LinearScene s;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    validate(b);
    const double gap = b.v_bottom - v0;
    if (std::abs(gap) <= kHorizonMargin) {
      s.excluded.push_back({i, "horizon-degenerate"});
      continue;
    }
    if (gap < 0) {
      s.excluded.push_back({i, "above-horizon"});
      continue;
    }
    if (!priors.has(b.category))
      throw InputError(std::string("no height prior configured for category '") +
                       to_string(b.category) + "'");
    s.boxes.push_back(b);
    s.indices.push_back(i);
    s.priors.push_back(priors.get(b.category));
    s.ratio.push_back((b.v_bottom - b.v_top) / gap);
  }
  if (s.boxes.empty())
    throw InputError("no usable detections: every box is on or above the horizon");
  return s;
}

double object_energy(const LinearScene& s, const std::vector<double>& heights) {
  double sum = 0;
  for (std::size_t i = 0; i < heights.size(); ++i) {
    const double d = (heights[i] - s.priors[i].mu_m) / s.priors[i].sigma_m;
    sum += s.boxes[i].weight * 0.5 * d * d;
  }
  return sum;
}

LayerState linear_layer(const LinearScene& s, double v0, double cam_height,
                        const std::vector<double>& heights, double extra_prior) {
  LayerState layer;
  layer.cam_height_m = cam_height;
  layer.heights_m = heights;
  double abs_sum = 0;
  for (std::size_t i = 0; i < heights.size(); ++i) {
    const auto& b = s.boxes[i];
    const double v_top = b.v_bottom - heights[i] / cam_height * (b.v_bottom - v0);
    layer.v_top.push_back(v_top);
    layer.residuals.push_back(b.v_top - v_top);
    abs_sum += std::abs(b.v_top - v_top);
  }
  const double n = static_cast<double>(heights.size());
  layer.reprojection_loss = abs_sum / n;
  layer.prior_loss = (object_energy(s, heights) + extra_prior) / n;
  layer.total_loss = layer.reprojection_loss + layer.prior_loss;
  return layer;
}

}  // namespace

void validate(const PgmOptions& o) {
  if (!std::isfinite(o.cam_height_mu)) throw std::invalid_argument("cam_height_mu must be finite");
  if (!(o.cam_height_sigma > 0)) throw std::invalid_argument("cam_height_sigma must be > 0");
  if (o.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(o.tolerance >= 0)) throw std::invalid_argument("tolerance must be >= 0");
  if (!(o.cam_height_min > 0 && o.cam_height_min < o.cam_height_max))
    throw std::invalid_argument("camera height bounds must satisfy 0 < min < max");
}

SceneEstimate pgm_fixed_height(double v0, std::span<const DetectionBox> boxes,
                               const PriorTable& canonical, double cam_height_min,
                               double cam_height_max) {
  const LinearScene s = collect(v0, boxes, canonical);
  std::vector<double> heights;
  for (const auto& p : s.priors) heights.push_back(p.mu_m);
  const double h = init_camera_height(v0, s.boxes, heights, cam_height_min, cam_height_max);

  SceneEstimate est;
  est.method = "pgm-fixed";
  est.cam_height_m = h;
  est.heights_m = heights;
  est.object_indices = s.indices;
  est.excluded = s.excluded;
  est.layers.push_back(linear_layer(s, v0, h, heights, 0.0));
  return est;
}

SceneEstimate pgm_full(double v0, std::span<const DetectionBox> boxes, const PriorTable& priors,
                       const PgmOptions& options) {
  validate(options);
  const LinearScene s = collect(v0, boxes, priors);
  const std::size_t n = s.boxes.size();
  const double cam_precision = 1.0 / (options.cam_height_sigma * options.cam_height_sigma);

  // Precision-weighted sums over objects; order them for permutation invariance.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = s.boxes[a];
    const auto& y = s.boxes[b];
    return std::tie(x.v_bottom, x.v_top, x.u_left, x.u_right, x.weight) <
           std::tie(y.v_bottom, y.v_top, y.u_left, y.u_right, y.weight);
  });
  double object_precision = 0;
  for (std::size_t i : order) {
    const double p = s.boxes[i].weight / (s.priors[i].sigma_m * s.priors[i].sigma_m);
    object_precision += p * s.ratio[i] * s.ratio[i];
  }

  auto cam_energy = [&](double h) {
    const double d = (h - options.cam_height_mu) / options.cam_height_sigma;
    return 0.5 * d * d;
  };
  auto heights_at = [&](double h) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = h * s.ratio[i];
    return out;
  };
  auto posterior = [&](double h, const std::vector<double>& heights) {
    return object_energy(s, heights) + cam_energy(h);
  };

  // Start from the fixed-height answer.
  std::vector<double> votes, weights;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.ratio[i] > 0) {
      votes.push_back(s.priors[i].mu_m / s.ratio[i]);
      weights.push_back(s.boxes[i].weight);
    }
  }
  double h = votes.empty() ? options.cam_height_mu
                           : weighted_median(std::move(votes), std::move(weights));
  h = std::clamp(h, options.cam_height_min, options.cam_height_max);
  std::vector<double> heights = heights_at(h);

  SceneEstimate est;
  est.method = "pgm";
  est.object_indices = s.indices;
  est.excluded = s.excluded;
  est.ill_posed = !(object_precision > 1e-9 * cam_precision);
  est.layers.push_back(linear_layer(s, v0, h, heights, cam_energy(h)));

  est.converged = false;
  double energy = posterior(h, heights);
  for (int it = 1; it <= options.max_iterations; ++it) {
    // Camera update: maximize the posterior with object heights h * k_i.
    double num = options.cam_height_mu * cam_precision;
    double den = cam_precision;
    for (std::size_t i : order) {
      const double p = s.boxes[i].weight / (s.priors[i].sigma_m * s.priors[i].sigma_m);
      num += p * s.ratio[i] * s.priors[i].mu_m;
      den += p * s.ratio[i] * s.ratio[i];
    }
    h = std::clamp(num / den, options.cam_height_min, options.cam_height_max);
    // Height update: zero residual under the linear model.
    heights = heights_at(h);
    est.layers.push_back(linear_layer(s, v0, h, heights, cam_energy(h)));
    est.iterations = it;
    const double next = posterior(h, heights);
    const bool done = std::abs(energy - next) < options.tolerance;
    energy = next;
    if (done) {
      est.converged = true;
      break;
    }
  }
  est.cam_height_m = h;
  est.heights_m = heights;
  return est;
}

}  // namespace gscale
