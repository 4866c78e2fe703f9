#ifndef DSPACE_GEOMETRY_HPP_
#define DSPACE_GEOMETRY_HPP_

#include <cmath>
#include <utility>

#include "dspace/types.hpp"

namespace dspace {

// Units: world coordinates are centimetres, image coordinates are pixels.
// Focal length is given in millimetres and pixel pitch in micrometres, the
// conversion to pixels happens once when the calibration matrix is built.

template <typename Scalar>
struct CameraIntrinsicsT {
  Scalar focal_length_mm = Scalar(-8);
  Scalar pixel_size_u_um = Scalar(8.9);
  Scalar pixel_size_v_um = Scalar(9.0);
  Scalar principal_u = Scalar(400);
  Scalar principal_v = Scalar(300);
  int width = 800;
  int height = 600;

  Scalar fu() const { return focal_length_mm / pixel_size_u_um * Scalar(1000); }
  Scalar fv() const { return focal_length_mm / pixel_size_v_um * Scalar(1000); }

  Matrix3T<Scalar> calibration_matrix() const {
    Matrix3T<Scalar> k = Matrix3T<Scalar>::Zero();
    k(0, 0) = fu();
    k(1, 1) = fv();
    k(0, 2) = principal_u;
    k(1, 2) = principal_v;
    k(2, 2) = Scalar(1);
    return k;
  }

  void validate() const {
    using std::isfinite;
    if (!(pixel_size_u_um > Scalar(0)) || !(pixel_size_v_um > Scalar(0)))
      throw Error(ErrorCode::InvalidParameter, "pixel sizes must be strictly positive");
    if (focal_length_mm == Scalar(0) || !isfinite(focal_length_mm))
      throw Error(ErrorCode::InvalidParameter, "focal length must be finite and nonzero");
    if (!isfinite(principal_u) || !isfinite(principal_v))
      throw Error(ErrorCode::InvalidParameter, "principal point must be finite");
    if (width <= 0 || height <= 0)
      throw Error(ErrorCode::InvalidParameter, "image size must be positive");
  }

  /// Default simulated camera: f = -8 mm, 8.9 x 9.0 um pixels, 800x600.
  static CameraIntrinsicsT simulated() { return CameraIntrinsicsT{}; }

  /// Pixel-unit calibration (K = [fu 0 u0; 0 fv v0; 0 0 1]).
  static CameraIntrinsicsT from_pixels(Scalar fu, Scalar fv, Scalar u0, Scalar v0, int width = 800,
                                       int height = 600) {
    return CameraIntrinsicsT{fu, Scalar(1000), Scalar(1000) * fu / fv, u0, v0, width, height};
  }
};

template <typename Scalar>
Matrix3T<Scalar> rotation_y(Scalar angle) {
  using std::cos;
  using std::sin;
  Matrix3T<Scalar> r;
  r << cos(angle), Scalar(0), sin(angle), Scalar(0), Scalar(1), Scalar(0), -sin(angle), Scalar(0),
      cos(angle);
  return r;
}

template <typename Scalar>
Matrix3T<Scalar> rotation_x(Scalar angle) {
  using std::cos;
  using std::sin;
  Matrix3T<Scalar> r;
  r << Scalar(1), Scalar(0), Scalar(0), Scalar(0), cos(angle), -sin(angle), Scalar(0), sin(angle),
      cos(angle);
  return r;
}

template <typename Scalar>
Matrix3T<Scalar> rotation_z(Scalar angle) {
  using std::cos;
  using std::sin;
  Matrix3T<Scalar> r;
  r << cos(angle), -sin(angle), Scalar(0), sin(angle), cos(angle), Scalar(0), Scalar(0), Scalar(0),
      Scalar(1);
  return r;
}

/// Camera centre and orientation in the world. Orientation is intrinsic
/// yaw (about y), then pitch (about x), then roll (about z); the resulting
/// matrix maps camera axes to world axes.
template <typename Scalar>
struct CameraPoseT {
  Vector3T<Scalar> position = Vector3T<Scalar>::Zero();
  Scalar yaw = Scalar(0);
  Scalar pitch = Scalar(0);
  Scalar roll = Scalar(0);

  Matrix3T<Scalar> rotation() const {
    return rotation_y(yaw) * rotation_x(pitch) * rotation_z(roll);
  }

  void validate() const {
    using std::isfinite;
    if (!position.allFinite() || !isfinite(yaw) || !isfinite(pitch) || !isfinite(roll))
      throw Error(ErrorCode::InvalidParameter, "camera pose must be finite");
  }
};

template <typename Scalar>
class ProjectiveCameraT {
 public:
  using Intrinsics = CameraIntrinsicsT<Scalar>;
  using Pose = CameraPoseT<Scalar>;

  ProjectiveCameraT() : ProjectiveCameraT(Intrinsics{}, Pose{}) {}

  ProjectiveCameraT(const Intrinsics& intrinsics, const Pose& pose)
      : intrinsics_(intrinsics), pose_(pose) {
    intrinsics_.validate();
    pose_.validate();
    const Matrix3T<Scalar> world_to_camera = pose_.rotation().transpose();
    Matrix34T<Scalar> extrinsic;
    extrinsic.template leftCols<3>() = world_to_camera;
    extrinsic.col(3) = -world_to_camera * pose_.position;
    projection_ = intrinsics_.calibration_matrix() * extrinsic;
  }

  /// Camera whose projection matrix is supplied directly; the pose is kept
  /// for bookkeeping only.
  static ProjectiveCameraT from_projection(const Intrinsics& intrinsics, const Pose& pose,
                                           const Matrix34T<Scalar>& projection) {
    ProjectiveCameraT camera(intrinsics, pose);
    camera.projection_ = projection;
    return camera;
  }

  const Intrinsics& intrinsics() const { return intrinsics_; }
  const Pose& pose() const { return pose_; }
  const Matrix34T<Scalar>& matrix() const { return projection_; }
  int width() const { return intrinsics_.width; }
  int height() const { return intrinsics_.height; }

  /// Signed depth along the optical axis (positive in front of the camera).
  Scalar depth(const Vector3T<Scalar>& x) const {
    return projection_.row(2).template head<3>().dot(x) + projection_(2, 3);
  }

  bool in_image(const Vector2T<Scalar>& uv) const {
    return uv.x() >= Scalar(0) && uv.x() < Scalar(width()) && uv.y() >= Scalar(0) &&
           uv.y() < Scalar(height());
  }

 private:
  Intrinsics intrinsics_;
  Pose pose_;
  Matrix34T<Scalar> projection_;
};

template <typename Scalar>
ProjectiveCameraT<Scalar> build_camera(const CameraIntrinsicsT<Scalar>& intrinsics,
                                       const CameraPoseT<Scalar>& pose) {
  return ProjectiveCameraT<Scalar>(intrinsics, pose);
}

/// Dehomogenised image of a world point. Throws ProjectionSingular on the
/// camera plane.
template <typename Scalar>
Vector2T<Scalar> project(const ProjectiveCameraT<Scalar>& camera, const Vector3T<Scalar>& x) {
  const Vector3T<Scalar> h = camera.matrix() * x.homogeneous();
  using std::abs;
  if (!(abs(h.z()) > Scalar(kHomogeneousEpsilon)))
    throw Error(ErrorCode::ProjectionSingular, "point lies on the camera plane");
  return h.template head<2>() / h.z();
}

/// Projective map between the world and the disparity space of a
/// horizontally rectified camera pair. Rows of the forward matrix are
/// (P_l row 1, P_l row 2, P_r row 1 - P_l row 1, P_l row 3), scaled so the
/// last row has unit norm.
template <typename Scalar>
class DisparityFrameT {
 public:
  DisparityFrameT() = default;

  DisparityFrameT(const Matrix34T<Scalar>& left, const Matrix34T<Scalar>& right, Side owner,
                  Scalar baseline, Scalar disparity_scale)
      : owner_(owner), baseline_(baseline), disparity_scale_(disparity_scale) {
    forward_.row(0) = left.row(0);
    forward_.row(1) = left.row(1);
    forward_.row(2) = right.row(0) - left.row(0);
    forward_.row(3) = left.row(2);
    forward_ /= forward_.row(3).norm();
    using std::abs;
    if (!(abs(forward_.determinant()) > Scalar(1e-12)))
      throw Error(ErrorCode::InvalidParameter, "disparity transform is not invertible");
    inverse_ = forward_.inverse();
  }

  const Matrix4T<Scalar>& forward() const { return forward_; }
  const Matrix4T<Scalar>& inverse() const { return inverse_; }
  Side owner() const { return owner_; }
  Scalar baseline() const { return baseline_; }
  /// fu * b: disparity equals disparity_scale / depth.
  Scalar disparity_scale() const { return disparity_scale_; }

  /// True when a disparity-space point lies in front of the owning camera.
  bool in_front(const Vector3T<Scalar>& y) const { return y.z() * disparity_scale_ > Scalar(0); }

 private:
  Matrix4T<Scalar> forward_ = Matrix4T<Scalar>::Identity();
  Matrix4T<Scalar> inverse_ = Matrix4T<Scalar>::Identity();
  Side owner_ = Side::Left;
  Scalar baseline_ = Scalar(1);
  Scalar disparity_scale_ = Scalar(1);
};

/// Right camera P_r = K[R^T | -R^T c + (b,0,0)] rectified with `left`, and the
/// disparity frame of the pair. Rows 2 and 3 of P_r are copied from P_l.
template <typename Scalar>
std::pair<ProjectiveCameraT<Scalar>, DisparityFrameT<Scalar>> make_rectified_pair(
    const ProjectiveCameraT<Scalar>& left, Scalar baseline, Side owner = Side::Left) {
  using std::isfinite;
  if (baseline == Scalar(0) || !isfinite(baseline))
    throw Error(ErrorCode::InvalidParameter, "baseline must be finite and nonzero");
  const Scalar fu = left.intrinsics().fu();
  Matrix34T<Scalar> right_matrix = left.matrix();
  right_matrix(0, 3) += fu * baseline;

  CameraPoseT<Scalar> right_pose = left.pose();
  right_pose.position -= left.pose().rotation() * Vector3T<Scalar>(baseline, Scalar(0), Scalar(0));
  auto right = ProjectiveCameraT<Scalar>::from_projection(left.intrinsics(), right_pose, right_matrix);
  return {right, DisparityFrameT<Scalar>(left.matrix(), right_matrix, owner, baseline, fu * baseline)};
}

/// Disparity frame anchored on `camera`, defined through an abstract camera
/// rectified with it that never produces observations.
template <typename Scalar>
DisparityFrameT<Scalar> rectified_companion(const ProjectiveCameraT<Scalar>& camera,
                                            Scalar abstract_baseline, Side owner = Side::Left) {
  return make_rectified_pair(camera, abstract_baseline, owner).second;
}

template <typename Scalar>
Vector3T<Scalar> to_disparity(const DisparityFrameT<Scalar>& frame, const Vector3T<Scalar>& x) {
  const Vector4T<Scalar> h = frame.forward() * x.homogeneous();
  using std::abs;
  if (!(abs(h.w()) > Scalar(kHomogeneousEpsilon)))
    throw Error(ErrorCode::SingularMapping, "point lies on the camera plane");
  return h.template head<3>() / h.w();
}

template <typename Scalar>
Vector3T<Scalar> from_disparity(const DisparityFrameT<Scalar>& frame, const Vector3T<Scalar>& y) {
  const Vector4T<Scalar> h = frame.inverse() * y.homogeneous();
  using std::abs;
  if (!(abs(h.w()) > Scalar(kHomogeneousEpsilon)))
    throw Error(ErrorCode::PointAtInfinity, "disparity maps to a point at infinity");
  return h.template head<3>() / h.w();
}

/// Non-throwing variants for particle loops; return false on a singular point.
template <typename Scalar>
bool try_to_disparity(const DisparityFrameT<Scalar>& frame, const Vector3T<Scalar>& x,
                      Vector3T<Scalar>& y) {
  const Vector4T<Scalar> h = frame.forward() * x.homogeneous();
  using std::abs;
  if (!(abs(h.w()) > Scalar(kHomogeneousEpsilon))) return false;
  y = h.template head<3>() / h.w();
  return y.allFinite();
}

template <typename Scalar>
bool try_from_disparity(const DisparityFrameT<Scalar>& frame, const Vector3T<Scalar>& y,
                        Vector3T<Scalar>& x) {
  const Vector4T<Scalar> h = frame.inverse() * y.homogeneous();
  using std::abs;
  if (!(abs(h.w()) > Scalar(kHomogeneousEpsilon))) return false;
  x = h.template head<3>() / h.w();
  return x.allFinite();
}

/// Orthographic observation of a disparity-space state on the left (u, v) or
/// right (u + d, v) image of the rectified pair. The dynamic form has three
/// unobserved velocity columns appended.
inline MatrixX disparity_observation_matrix(Side camera_side, bool dynamic) {
  MatrixX h = MatrixX::Zero(2, dynamic ? 6 : 3);
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  if (camera_side == Side::Right) h(0, 2) = 1.0;
  return h;
}

using CameraIntrinsics = CameraIntrinsicsT<double>;
using CameraPose = CameraPoseT<double>;
using ProjectiveCamera = ProjectiveCameraT<double>;
using DisparityFrame = DisparityFrameT<double>;

/// Abstract-camera baseline for companion frames. Negative so that, with the
/// negative focal length convention, points in front of the camera have
/// positive disparity.
inline constexpr double kDefaultAbstractBaseline = -1.0;

}  // namespace dspace

#endif  // DSPACE_GEOMETRY_HPP_
