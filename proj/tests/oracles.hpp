#pragma once

// Test-only reference helpers. Nothing here calls into the solver's
// closed forms except where a helper says so explicitly.

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <utility>
#include <vector>
#include <numbers>
#include <random>

#include <Eigen/Core>

#include "gscale/geometry.hpp"
#include "gscale/pose_prior.hpp"
#include "gscale/scene.hpp"

namespace gscale::testing_oracles {

struct SampledConfig {
  CameraParams camera;
  GroundObject object;
};

/// Uniform draws over pitch [-45, 45] deg, fov [20, 120] deg,
/// h_cam [0.3, 20] m, z [1, 200] m, h_obj [0.2, 5] m. Draws where either
/// end of the object has optical-axis depth below 0.1 m (behind or grazing
/// the camera plane) are rejected and redrawn.
class ConfigSampler {
public:
  explicit ConfigSampler(std::uint64_t seed) : rng_(seed) {}

  SampledConfig next() {
    constexpr double deg = std::numbers::pi / 180.0;
    static constexpr double heights[] = {480.0, 512.0, 1080.0};
    for (;;) {
      const double pitch = uniform(-45.0, 45.0) * deg;
      const double fov = uniform(20.0, 120.0) * deg;
      const double h_cam = uniform(0.3, 20.0);
      const double z = uniform(1.0, 200.0);
      const double h_obj = uniform(0.2, 5.0);
      const double image_h = heights[std::uniform_int_distribution<int>(0, 2)(rng_)];
      const double c = std::cos(pitch), s = std::sin(pitch);
      const double depth_bottom = z * c - h_cam * s;
      const double depth_top = z * c - (h_cam - h_obj) * s;
      if (depth_bottom < 0.1 || depth_top < 0.1) continue;
      SampledConfig out;
      out.camera = make_camera(pitch, fov, h_cam, image_h * 4.0 / 3.0, image_h);
      out.object = GroundObject{z, 0.0, h_obj};
      return out;
    }
  }

  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng_);
  }

  std::mt19937_64& engine() { return rng_; }

private:
  std::mt19937_64 rng_;
};

/// Central differences of a scalar function of a vector.
inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                        const Eigen::VectorXd& x, double step = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    g[i] = (fn(hi) - fn(lo)) / (2.0 * step);
  }
  return g;
}

/// Central-difference Jacobian of a vector function.
inline Eigen::MatrixXd central_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x,
    double step = 1e-6) {
  const Eigen::VectorXd f0 = fn(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    J.col(i) = (fn(hi) - fn(lo)) / (2.0 * step);
  }
  return J;
}

/// Relative error with an absolute floor, used by all derivative checks.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace gscale::testing_oracles

namespace gscale::testing_oracles {

/// Brute-force minimizer of the scene objective over camera height.
///
/// For a fixed camera height the objective separates per object, so each
/// height is found by golden-section search between the prior mean and the
/// height that zeroes the residual; the minimizer lies in that bracket.
/// The camera height is then scanned on a coarse grid and refined on a fine
/// grid around the coarse winner. Uses geometry closed forms only; no solver
/// code. Objects carry no keypoints (upright ratio 1).
struct GridOracle {
  double v0{0.5};
  double fov_rad{1.0};
  double principal_v{0.5};
  std::vector<DetectionBox> boxes;
  std::vector<CategoryPrior> priors;
  double alpha_reprojection{1.0};
  double alpha_prior{0.1};
  PriorMode mode{PriorMode::LogDensity};
  double height_min{0.1};
  double height_max{10.0};
  int golden_iterations{48};

  CameraParams camera(double h_cam) const {
    return camera_from_horizon(v0, fov_rad, h_cam, 1.0, 1.0, principal_v);
  }

  double object_term(const CameraParams& cam, double depth, std::size_t i, double h) const {
    const double n = static_cast<double>(boxes.size());
    double v_top;
    try {
      v_top = project_vertical(cam, GroundObject{depth, 0.0, h}).v_top;
    } catch (const GeometryError&) {
      return std::numeric_limits<double>::infinity();
    }
    const double d = (h - priors[i].mu_m) / priors[i].sigma_m;
    const double prior = mode == PriorMode::LogDensity
                             ? 0.5 * d * d
                             : -std::exp(-0.5 * d * d) /
                                   (priors[i].sigma_m * std::sqrt(2.0 * std::numbers::pi));
    return alpha_reprojection * std::abs(boxes[i].v_top - v_top) / n + alpha_prior * prior / n;
  }

  /// Best object height and its term at a fixed camera height.
  std::pair<double, double> best_height(const CameraParams& cam, std::size_t i) const {
    const double depth = depth_from_bottom(cam, boxes[i].v_bottom);
    double kink = height_from_box_exact(cam, boxes[i].span());
    kink = std::clamp(kink, height_min, height_max);
    double a = std::min(kink, priors[i].mu_m), b = std::max(kink, priors[i].mu_m);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = object_term(cam, depth, i, x1), f2 = object_term(cam, depth, i, x2);
    for (int it = 0; it < golden_iterations; ++it) {
      if (f1 < f2) {
        b = x2, x2 = x1, f2 = f1;
        x1 = b - g * (b - a);
        f1 = object_term(cam, depth, i, x1);
      } else {
        a = x1, x1 = x2, f1 = f2;
        x2 = a + g * (b - a);
        f2 = object_term(cam, depth, i, x2);
      }
    }
    // Endpoints cover a kink or prior mean sitting exactly at the optimum.
    std::pair<double, double> best{0.5 * (a + b), object_term(cam, depth, i, 0.5 * (a + b))};
    for (double h : {kink, priors[i].mu_m}) {
      const double f = object_term(cam, depth, i, h);
      if (f < best.second) best = {h, f};
    }
    return best;
  }

  double loss_at(double h_cam) const {
    const CameraParams cam = camera(h_cam);
    double total = 0;
    for (std::size_t i = 0; i < boxes.size(); ++i) total += best_height(cam, i).second;
    return total;
  }

  /// Scan [lo, hi] at `coarse` steps, then +/- 2 coarse steps at `fine`.
  double argmin_cam_height(double lo = 0.1, double hi = 50.0, double coarse = 1e-2,
                           double fine = 1e-3) const {
    auto scan = [&](double a, double b, double step) {
      double best_h = a, best_f = std::numeric_limits<double>::infinity();
      const int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
      for (int k = 0; k <= n; ++k) {
        const double h = a + k * step;
        const double f = loss_at(h);
        if (f < best_f) best_f = f, best_h = h;
      }
      return best_h;
    };
    const double h0 = scan(lo, hi, coarse);
    return scan(std::max(lo, h0 - 2 * coarse), std::min(hi, h0 + 2 * coarse), fine);
  }
};

}  // namespace gscale::testing_oracles
