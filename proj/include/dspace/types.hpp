#ifndef DSPACE_TYPES_HPP_
#define DSPACE_TYPES_HPP_

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dspace {

template <typename Scalar> using Vector2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vector3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vector4T = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar> using Matrix3T = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Matrix4T = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar> using Matrix34T = Eigen::Matrix<Scalar, 3, 4>;

using Vector2 = Vector2T<double>;
using Vector3 = Vector3T<double>;
using Vector4 = Vector4T<double>;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix2 = Eigen::Matrix2d;
using Matrix3 = Matrix3T<double>;
using Matrix4 = Matrix4T<double>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix34 = Matrix34T<double>;
using VectorX = Eigen::VectorXd;
using MatrixX = Eigen::MatrixXd;

/// Physical camera of a two-camera rig.
enum class Side : std::uint8_t { Left = 0, Right = 1 };

inline constexpr int index_of(Side side) { return static_cast<int>(side); }
inline constexpr Side other(Side side) { return side == Side::Left ? Side::Right : Side::Left; }
inline const char* to_string(Side side) { return side == Side::Left ? "left" : "right"; }

/// Identifies the disparity space a belief is expressed in.
struct FrameId {
  int value = 0;
  friend constexpr auto operator<=>(FrameId, FrameId) = default;
};

enum class ErrorCode {
  InvalidParameter,
  ProjectionSingular,
  SingularMapping,
  PointAtInfinity,
  NumericalDegeneracy,
  DegeneratePrediction,
  TargetLeftFov,
  NormalisationFailure,
  InvalidInput,
  ConfigError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid parameter";
    case ErrorCode::ProjectionSingular: return "projection singular";
    case ErrorCode::SingularMapping: return "singular mapping";
    case ErrorCode::PointAtInfinity: return "point at infinity";
    case ErrorCode::NumericalDegeneracy: return "numerical degeneracy";
    case ErrorCode::DegeneratePrediction: return "degenerate prediction";
    case ErrorCode::TargetLeftFov: return "target left field of view";
    case ErrorCode::NormalisationFailure: return "normalisation failure";
    case ErrorCode::InvalidInput: return "invalid input";
    case ErrorCode::ConfigError: return "config error";
  }
  return "unknown";
}

/// Tolerance on the homogeneous scale before dehomogenisation.
inline constexpr double kHomogeneousEpsilon = 1e-12;

}  // namespace dspace

#endif  // DSPACE_TYPES_HPP_
