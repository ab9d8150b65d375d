#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gscale/geometry.hpp"

namespace gscale {

/// Gaussian over the upright metric height of a category.
struct CategoryPrior {
  Category category{Category::Person};
  double mu_m{0};
  double sigma_m{1};
};

/// Defaults fitted from population statistics.
inline constexpr CategoryPrior kPersonPrior{Category::Person, 1.70, 0.09};
inline constexpr CategoryPrior kCarPrior{Category::Car, 1.59, 0.21};

/// Per-category lookup. "other" has no default and must be supplied.
class PriorTable {
public:
  PriorTable();

  void set(const CategoryPrior& prior);
  void clear(Category c);
  bool has(Category c) const;
  /// Throws std::invalid_argument if no prior is registered for `c`.
  const CategoryPrior& get(Category c) const;

private:
  std::array<std::optional<CategoryPrior>, 3> table_;
};

enum class PriorMode { Density, LogDensity };

const char* to_string(PriorMode m);

double gaussian_density(double x, double mu, double sigma);

/// Mean prior loss over `heights`. Density mode is the negative mean
/// Gaussian density; log-density mode is the mean negative log density.
double prior_loss(std::span<const double> heights, const CategoryPrior& prior,
                  PriorMode mode);

/// Per-object term and its first two derivatives w.r.t. the height.
/// The second derivative is replaced by a positive Gauss-Newton-style
/// curvature in density mode.
struct PriorTerm {
  double value{0};
  double gradient{0};
  double curvature{0};
};

PriorTerm prior_term(double height, const CategoryPrior& prior, PriorMode mode);

// --------------------------------------------------------------------------
// Keypoints

/// COCO 17-keypoint skeleton order.
enum class Keypoint : int {
  Nose = 0, LeftEye, RightEye, LeftEar, RightEar,
  LeftShoulder, RightShoulder, LeftElbow, RightElbow,
  LeftWrist, RightWrist, LeftHip, RightHip,
  LeftKnee, RightKnee, LeftAnkle, RightAnkle
};

inline constexpr int kNumKeypoints = 17;

const char* keypoint_name(Keypoint k);

struct KeypointObservation {
  double u{0};
  double v{0};
  bool visible{false};

  bool operator==(const KeypointObservation&) const = default;
};

struct KeypointSet {
  std::array<KeypointObservation, kNumKeypoints> points{};

  const KeypointObservation& operator[](Keypoint k) const {
    return points[static_cast<int>(k)];
  }
  KeypointObservation& operator[](Keypoint k) { return points[static_cast<int>(k)]; }

  bool operator==(const KeypointSet&) const = default;

  bool head_visible() const;
  bool any_ankle_visible() const;
};

class MissingKeypointsError : public std::invalid_argument {
public:
  explicit MissingKeypointsError(std::vector<std::string> missing);
  const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
  std::vector<std::string> missing_;
};

struct UprightRatio {
  double ratio{1.0};
};

inline constexpr double kUprightRatioMax = 1.05;
inline constexpr double kNonStandingThreshold = 0.90;
inline constexpr double kDefaultHeadExtension = 0.08;

/// Ratio between the posed vertical extent of a person and the length of
/// the articulated head-to-ankle chain. Clamped to (0, 1.05].
///
/// The chain runs from the highest visible head keypoint through the
/// shoulder midpoint and hip midpoint down the longer visible leg. The
/// head-top lies above the highest head keypoint by `head_extension`
/// times the upright length, and that extension counts toward both lengths.
/// Requires 0 <= head_extension < 1.
UprightRatio upright_ratio(const KeypointSet& kps,
                           double head_extension = kDefaultHeadExtension);

inline bool is_non_standing(UprightRatio r) { return r.ratio < kNonStandingThreshold; }

inline double upright_to_actual(double h_upright, UprightRatio r) { return h_upright * r.ratio; }
inline double actual_to_upright(double h_actual, UprightRatio r) { return h_actual / r.ratio; }

}  // namespace gscale
