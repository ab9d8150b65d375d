#pragma once

// Ground-plane camera model: zero roll, zero yaw, pitch-only rotation.
//
// World frame: y up, z forward along the ground, ground plane y = 0. The
// optical center sits at (0, h_cam, 0). Image frame: v grows downward, and a
// positive pitch tilts the camera up, which moves the horizon down:
//
//   v0 = v_c + f * tan(pitch)
//
// All functions here work in pixels of a camera whose vertical size is
// image_h_px; ImageVerticalSpan and HorizonEstimate carry coordinates
// normalized by image height. Using image_h_px = 1 makes pixels and
// normalized units coincide, which is what the solver does.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gscale {

/// Absolute guard applied to every denominator in the closed forms.
inline constexpr double kSingularEps = 1e-12;
/// Minimum separation between a bottom coordinate and the horizon.
inline constexpr double kHorizonEps = 1e-9;

class GeometryError : public std::domain_error {
public:
  enum class Kind { Domain, Singular, HorizonDegenerate, BehindCamera };

  GeometryError(Kind kind, const std::string& what)
      : std::domain_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

enum class Category { Person, Car, Other };

inline const char* to_string(Category c) {
  switch (c) {
    case Category::Person: return "person";
    case Category::Car: return "car";
    case Category::Other: return "other";
  }
  return "other";
}

template <typename Scalar>
struct BasicCamera {
  Scalar pitch_rad{0};
  Scalar fov_rad{0};
  Scalar focal_px{0};
  Scalar cam_height_m{0};
  Scalar image_w_px{0};
  Scalar image_h_px{0};
  Scalar principal_v_px{0};

  Scalar principal_u_px() const { return image_w_px / Scalar(2); }

  bool operator==(const BasicCamera&) const = default;
};

template <typename Scalar>
struct BasicGroundObject {
  Scalar depth_m{0};
  Scalar lateral_m{0};
  Scalar height_m{0};
  Scalar width_m{0};
  Category category{Category::Person};

  bool operator==(const BasicGroundObject&) const = default;
};

/// Top and bottom of an object's image footprint, normalized by image height.
template <typename Scalar>
struct BasicVerticalSpan {
  Scalar v_top{0};
  Scalar v_bottom{0};
};

template <typename Scalar>
struct BasicHorizon {
  Scalar v0{0};
};

using CameraParams = BasicCamera<double>;
using GroundObject = BasicGroundObject<double>;
using ImageVerticalSpan = BasicVerticalSpan<double>;
using HorizonEstimate = BasicHorizon<double>;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Matrix34 = Eigen::Matrix<Scalar, 3, 4>;

// --------------------------------------------------------------------------
// Intrinsics

template <typename Scalar>
Scalar focal_from_fov(Scalar fov_rad, Scalar image_h_px) {
  using std::tan;
  if (!(fov_rad > Scalar(0) && fov_rad < Scalar(std::numbers::pi)))
    throw GeometryError(GeometryError::Kind::Domain,
                        "field of view must lie in (0, pi)");
  if (!(image_h_px > Scalar(0)))
    throw GeometryError(GeometryError::Kind::Domain,
                        "image height must be positive");
  return (image_h_px / Scalar(2)) / tan(fov_rad / Scalar(2));
}

template <typename Scalar>
Scalar fov_from_focal(Scalar focal_px, Scalar image_h_px) {
  using std::atan2;
  if (!(focal_px > Scalar(0)) || !(image_h_px > Scalar(0)))
    throw GeometryError(GeometryError::Kind::Domain,
                        "focal length and image height must be positive");
  return Scalar(2) * atan2(image_h_px / Scalar(2), focal_px);
}

/// Throws GeometryError(Domain) when a camera violates its invariants.
template <typename Scalar>
void validate(const BasicCamera<Scalar>& cam) {
  using std::abs;
  if (!(cam.focal_px > Scalar(0)))
    throw GeometryError(GeometryError::Kind::Domain, "focal_px must be > 0");
  if (!(cam.fov_rad > Scalar(0) && cam.fov_rad < Scalar(std::numbers::pi)))
    throw GeometryError(GeometryError::Kind::Domain, "fov_rad must lie in (0, pi)");
  if (!(cam.image_h_px > Scalar(0)))
    throw GeometryError(GeometryError::Kind::Domain, "image_h_px must be > 0");
  if (!(cam.cam_height_m > Scalar(0)))
    throw GeometryError(GeometryError::Kind::Domain, "cam_height_m must be > 0");
  if (!(abs(cam.pitch_rad) < Scalar(std::numbers::pi / 2)))
    throw GeometryError(GeometryError::Kind::Domain, "|pitch_rad| must be < pi/2");
  const Scalar f = focal_from_fov(cam.fov_rad, cam.image_h_px);
  const Scalar tol = std::max(Scalar(1e-9), Scalar(64) * std::numeric_limits<Scalar>::epsilon());
  if (abs(f - cam.focal_px) > tol * f)
    throw GeometryError(GeometryError::Kind::Domain,
                        "focal_px inconsistent with fov_rad");
}

/// Builds a camera from pitch and vertical field of view. A negative
/// principal_v_px selects the image center.
template <typename Scalar>
BasicCamera<Scalar> make_camera(Scalar pitch_rad, Scalar fov_rad,
                                Scalar cam_height_m, Scalar image_w_px,
                                Scalar image_h_px,
                                Scalar principal_v_px = Scalar(-1)) {
  BasicCamera<Scalar> cam;
  cam.pitch_rad = pitch_rad;
  cam.fov_rad = fov_rad;
  cam.focal_px = focal_from_fov(fov_rad, image_h_px);
  cam.cam_height_m = cam_height_m;
  cam.image_w_px = image_w_px;
  cam.image_h_px = image_h_px;
  cam.principal_v_px =
      principal_v_px < Scalar(0) ? image_h_px / Scalar(2) : principal_v_px;
  validate(cam);
  return cam;
}

// --------------------------------------------------------------------------
// Horizon <-> pitch

template <typename Scalar>
BasicHorizon<Scalar> horizon_from_pitch(const BasicCamera<Scalar>& cam) {
  using std::tan;
  const Scalar v0_px = cam.principal_v_px + cam.focal_px * tan(cam.pitch_rad);
  return {v0_px / cam.image_h_px};
}

/// Inverse of horizon_from_pitch; only the intrinsics of `cam` are read.
template <typename Scalar>
Scalar pitch_from_horizon(const BasicCamera<Scalar>& cam,
                          const BasicHorizon<Scalar>& horizon) {
  using std::atan;
  const Scalar v0_px = horizon.v0 * cam.image_h_px;
  return atan((v0_px - cam.principal_v_px) / cam.focal_px);
}

/// Camera whose pitch is implied by a normalized horizon row.
template <typename Scalar>
BasicCamera<Scalar> camera_from_horizon(Scalar v0, Scalar fov_rad,
                                        Scalar cam_height_m, Scalar image_w_px,
                                        Scalar image_h_px,
                                        Scalar principal_v_px = Scalar(-1)) {
  auto cam = make_camera(Scalar(0), fov_rad, cam_height_m, image_w_px,
                         image_h_px, principal_v_px);
  cam.pitch_rad = pitch_from_horizon(cam, BasicHorizon<Scalar>{v0});
  return cam;
}

// --------------------------------------------------------------------------
// Closed forms
//
// With t = tan(pitch), Delta = h_cam - y (camera height above the point) and
// z the ground distance, a point at world height y projects to
//
//   v = v_c + f (Delta + z t) / (z - Delta t).
//
// The denominator is the optical-axis depth divided by cos(pitch).

namespace detail {

template <typename Scalar>
Scalar project_row_px(const BasicCamera<Scalar>& cam, Scalar above_point,
                      Scalar depth) {
  using std::abs;
  using std::tan;
  const Scalar t = tan(cam.pitch_rad);
  const Scalar den = depth - above_point * t;
  if (abs(den) < Scalar(kSingularEps))
    throw GeometryError(GeometryError::Kind::Singular,
                        "point lies in the camera plane");
  if (den < Scalar(0))
    throw GeometryError(GeometryError::Kind::BehindCamera,
                        "point lies behind the camera");
  return cam.principal_v_px + cam.focal_px * (above_point + depth * t) / den;
}

}  // namespace detail

template <typename Scalar>
BasicVerticalSpan<Scalar> project_vertical(const BasicCamera<Scalar>& cam,
                                           const BasicGroundObject<Scalar>& obj) {
  if (!(obj.depth_m > Scalar(0)))
    throw GeometryError(GeometryError::Kind::Domain, "depth_m must be > 0");
  const Scalar h = cam.cam_height_m;
  const Scalar v_b = detail::project_row_px(cam, h, obj.depth_m);
  const Scalar v_t = detail::project_row_px(cam, h - obj.height_m, obj.depth_m);
  return {v_t / cam.image_h_px, v_b / cam.image_h_px};
}

/// Ground distance of the point whose image row is v_bottom (normalized).
template <typename Scalar>
Scalar depth_from_bottom(const BasicCamera<Scalar>& cam, Scalar v_bottom) {
  using std::abs;
  using std::tan;
  const Scalar t = tan(cam.pitch_rad);
  const Scalar f = cam.focal_px;
  const Scalar v_b = v_bottom * cam.image_h_px;
  const Scalar v0 = cam.principal_v_px + f * t;
  const Scalar gap = v_b - v0;
  if (abs(gap) <= Scalar(kHorizonEps) * cam.image_h_px)
    throw GeometryError(GeometryError::Kind::HorizonDegenerate,
                        "bottom coincides with the horizon");
  const Scalar z = cam.cam_height_m * (f + (v_b - cam.principal_v_px) * t) / gap;
  if (!(z > Scalar(0)))
    throw GeometryError(GeometryError::Kind::HorizonDegenerate,
                        "bottom lies above the horizon");
  return z;
}

/// Exact metric height of a ground object from its vertical span.
///
/// Eliminating the depth between the top and bottom projections gives
///
///   h_obj = h_cam (v_b - v_t) (1 + t^2) / ((v_b - v0) (1 + (v_t - v_c) t / f))
///
/// which is the linear ratio below times a pitch correction that is
/// exactly 1 at zero pitch.
template <typename Scalar>
Scalar height_from_box_exact(const BasicCamera<Scalar>& cam,
                             const BasicVerticalSpan<Scalar>& span) {
  using std::abs;
  using std::tan;
  const Scalar t = tan(cam.pitch_rad);
  const Scalar f = cam.focal_px;
  const Scalar v_t = span.v_top * cam.image_h_px;
  const Scalar v_b = span.v_bottom * cam.image_h_px;
  const Scalar v0 = cam.principal_v_px + f * t;
  if (abs(v_b - v0) <= Scalar(kHorizonEps) * cam.image_h_px)
    throw GeometryError(GeometryError::Kind::HorizonDegenerate,
                        "bottom coincides with the horizon");
  const Scalar top_term = Scalar(1) + (v_t - cam.principal_v_px) * t / f;
  if (abs(top_term) < Scalar(kSingularEps))
    throw GeometryError(GeometryError::Kind::Singular,
                        "top ray is parallel to the vertical");
  return cam.cam_height_m * (v_b - v_t) * (Scalar(1) + t * t) /
         ((v_b - v0) * top_term);
}

/// Linearized height under small pitch and long focal length.
template <typename Scalar>
Scalar height_from_box_hoiem(Scalar cam_height_m, Scalar v0,
                             const BasicVerticalSpan<Scalar>& span) {
  using std::abs;
  const Scalar gap = v0 - span.v_bottom;
  if (abs(gap) <= Scalar(kHorizonEps))
    throw GeometryError(GeometryError::Kind::HorizonDegenerate,
                        "bottom coincides with the horizon");
  return cam_height_m * (span.v_top - span.v_bottom) / gap;
}

// --------------------------------------------------------------------------
// Full projection matrix, kept independent of the closed forms above.

template <typename Scalar>
Matrix34<Scalar> projection_matrix(const BasicCamera<Scalar>& cam) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(cam.pitch_rad);
  const Scalar s = sin(cam.pitch_rad);

  Eigen::Matrix<Scalar, 3, 3> K;
  K << cam.focal_px, Scalar(0), cam.principal_u_px(),
       Scalar(0), cam.focal_px, cam.principal_v_px,
       Scalar(0), Scalar(0), Scalar(1);

  // Rows are the camera's right, down and forward axes in world coordinates.
  // The world frame (x right, y up, z forward) is left-handed, so this
  // orthonormal basis change has determinant -1.
  Eigen::Matrix<Scalar, 3, 3> R;
  R << Scalar(1), Scalar(0), Scalar(0),
       Scalar(0), -c, s,
       Scalar(0), s, c;

  const Vector3<Scalar> center(Scalar(0), cam.cam_height_m, Scalar(0));
  Matrix34<Scalar> Rt;
  Rt.template leftCols<3>() = R;
  Rt.col(3) = -R * center;
  return K * Rt;
}

/// Pixel coordinates (u, v) of a world point.
template <typename Scalar>
Vector2<Scalar> projection_oracle(const BasicCamera<Scalar>& cam,
                                  const Vector3<Scalar>& point) {
  const Eigen::Matrix<Scalar, 4, 1> X = point.homogeneous();
  const Vector3<Scalar> x = projection_matrix(cam) * X;
  if (!(x.z() > Scalar(kSingularEps)))
    throw GeometryError(GeometryError::Kind::BehindCamera,
                        "point lies behind the camera");
  return x.hnormalized();
}

}  // namespace gscale
