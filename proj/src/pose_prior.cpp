#include "gscale/pose_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gscale {

PriorTable::PriorTable() {
  set(kPersonPrior);
  set(kCarPrior);
}

void PriorTable::set(const CategoryPrior& prior) {
  if (!(prior.sigma_m > 0))
    throw std::invalid_argument("prior sigma must be positive");
  table_[static_cast<int>(prior.category)] = prior;
}

void PriorTable::clear(Category c) { table_[static_cast<int>(c)].reset(); }

bool PriorTable::has(Category c) const {
  return table_[static_cast<int>(c)].has_value();
}

const CategoryPrior& PriorTable::get(Category c) const {
  const auto& slot = table_[static_cast<int>(c)];
  if (!slot)
    throw std::invalid_argument(std::string("no height prior configured for category '") +
                                to_string(c) + "'");
  return *slot;
}

const char* to_string(PriorMode m) {
  return m == PriorMode::Density ? "density" : "log_density";
}

double gaussian_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

PriorTerm prior_term(double height, const CategoryPrior& prior, PriorMode mode) {
  const double s2 = prior.sigma_m * prior.sigma_m;
  const double d = height - prior.mu_m;
  if (mode == PriorMode::LogDensity) {
    return {0.5 * d * d / s2 + std::log(prior.sigma_m * std::sqrt(2.0 * std::numbers::pi)),
            d / s2, 1.0 / s2};
  }
  const double p = gaussian_density(height, prior.mu_m, prior.sigma_m);
  return {-p, p * d / s2, p / s2};
}

double prior_loss(std::span<const double> heights, const CategoryPrior& prior,
                  PriorMode mode) {
  if (heights.empty())
    throw std::invalid_argument("prior_loss needs at least one height");
  double sum = 0.0;
  for (double h : heights) sum += prior_term(h, prior, mode).value;
  return sum / static_cast<double>(heights.size());
}

// --------------------------------------------------------------------------

const char* keypoint_name(Keypoint k) {
  static constexpr const char* names[kNumKeypoints] = {
      "nose", "left_eye", "right_eye", "left_ear", "right_ear",
      "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
      "left_wrist", "right_wrist", "left_hip", "right_hip",
      "left_knee", "right_knee", "left_ankle", "right_ankle"};
  return names[static_cast<int>(k)];
}

namespace {

constexpr Keypoint kHead[] = {Keypoint::Nose, Keypoint::LeftEye, Keypoint::RightEye,
                              Keypoint::LeftEar, Keypoint::RightEar};

struct Point {
  double u, v;
};

double dist(Point a, Point b) { return std::hypot(a.u - b.u, a.v - b.v); }

std::optional<Point> midpoint(const KeypointSet& kps, Keypoint a, Keypoint b) {
  const auto& pa = kps[a];
  const auto& pb = kps[b];
  if (pa.visible && pb.visible) return Point{(pa.u + pb.u) / 2, (pa.v + pb.v) / 2};
  if (pa.visible) return Point{pa.u, pa.v};
  if (pb.visible) return Point{pb.u, pb.v};
  return std::nullopt;
}

}  // namespace

bool KeypointSet::head_visible() const {
  return std::any_of(std::begin(kHead), std::end(kHead),
                     [&](Keypoint k) { return (*this)[k].visible; });
}

bool KeypointSet::any_ankle_visible() const {
  return (*this)[Keypoint::LeftAnkle].visible || (*this)[Keypoint::RightAnkle].visible;
}

MissingKeypointsError::MissingKeypointsError(std::vector<std::string> missing)
    : std::invalid_argument([&] {
        std::string msg = "missing keypoints for upright ratio:";
        for (const auto& m : missing) msg += " " + m;
        return msg;
      }()),
      missing_(std::move(missing)) {}

UprightRatio upright_ratio(const KeypointSet& kps, double head_extension) {
  if (!(head_extension >= 0.0 && head_extension < 1.0))
    throw std::invalid_argument("head_extension must lie in [0, 1)");
  for (const auto& p : kps.points) {
    if (p.visible && !(std::isfinite(p.u) && std::isfinite(p.v)))
      throw std::invalid_argument("keypoint coordinates must be finite");
  }

  std::vector<std::string> missing;

  // Highest visible head keypoint (smallest v).
  std::optional<Point> head;
  for (Keypoint k : kHead) {
    const auto& p = kps[k];
    if (p.visible && (!head || p.v < head->v)) head = Point{p.u, p.v};
  }
  if (!head) missing.emplace_back("head");

  const auto shoulders = midpoint(kps, Keypoint::LeftShoulder, Keypoint::RightShoulder);
  if (!shoulders) missing.emplace_back("shoulders");
  const auto hips = midpoint(kps, Keypoint::LeftHip, Keypoint::RightHip);
  if (!hips) missing.emplace_back("hips");

  struct Leg {
    Keypoint knee, ankle;
  };
  double leg_length = -1.0;
  double lowest_ankle = -std::numeric_limits<double>::infinity();
  for (Leg leg : {Leg{Keypoint::LeftKnee, Keypoint::LeftAnkle},
                  Leg{Keypoint::RightKnee, Keypoint::RightAnkle}}) {
    const auto& ankle = kps[leg.ankle];
    if (ankle.visible) lowest_ankle = std::max(lowest_ankle, ankle.v);
    const auto& knee = kps[leg.knee];
    if (ankle.visible && knee.visible && hips) {
      leg_length = std::max(leg_length, dist(*hips, {knee.u, knee.v}) +
                                            dist({knee.u, knee.v}, {ankle.u, ankle.v}));
    }
  }
  if (!kps.any_ankle_visible()) missing.emplace_back("ankle");
  else if (leg_length < 0.0) missing.emplace_back("knee+ankle pair");

  if (!missing.empty()) throw MissingKeypointsError(std::move(missing));

  const double chain = dist(*head, *shoulders) + dist(*shoulders, *hips) + leg_length;
  if (!(chain > 0.0)) throw std::invalid_argument("degenerate keypoint chain");

  // The extension is a fraction of l_upright, which itself includes it.
  const double l_upright = chain / (1.0 - head_extension);
  const double extension = l_upright - chain;
  const double l_actual = (lowest_ankle - head->v) + extension;
  const double r = std::clamp(l_actual / l_upright,
                              std::numeric_limits<double>::min(), kUprightRatioMax);
  return {r};
}

}  // namespace gscale
