#ifndef DSPACE_SINGLE_OBJECT_HPP_
#define DSPACE_SINGLE_OBJECT_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dspace/gaussian.hpp"
#include "dspace/geometry.hpp"

namespace dspace {

/// Image-plane observation (u, v) in pixels with its noise covariance.
/// Carries no object identity.
struct Observation {
  Vector2 z = Vector2::Zero();
  Matrix2 covariance = Matrix2::Identity();
  Side camera = Side::Left;
  int time = 0;
};
using ObservationSet = std::vector<Observation>;

/// Everything one camera reported at one time step. An empty set is still a
/// scan: it carries missed-detection information.
struct Scan {
  int time = 0;
  Side camera = Side::Left;
  ObservationSet observations;
};

ObservationSet flatten(std::span<const Scan> scans);

enum class MotionKind { Static, ConstantVelocity };

/// Constant-velocity transition in the world: x' = x + v*dt, v' = v + w with
/// w ~ N(0, q*I) per step of length dt (q in cm^2/s^2).
struct MotionModel {
  MotionKind kind = MotionKind::Static;
  double process_noise_variance = 0.0;
  double dt = 1.0;

  void validate() const;
  static MotionModel stationary(double dt = 1.0) { return {MotionKind::Static, 0.0, dt}; }
  static MotionModel constant_velocity(double q, double dt = 1.0) {
    return {MotionKind::ConstantVelocity, q, dt};
  }
};

struct DisparityPrior {
  double mean = 7.0;
  double variance = 5.4;
};

/// Relative step of the finite differences that map velocities between
/// disparity space and the world.
inline constexpr double kVelocityStep = 1e-3;

/// Prior on (du, dv, dd) in pixels per second.
struct VelocityPrior {
  Vector3 mean = Vector3::Zero();
  Vector3 variance = Vector3::Constant(0.03);
};

GaussianState initialise(const Observation& obs, const DisparityPrior& disparity_prior,
                         const std::optional<VelocityPrior>& velocity_prior, FrameId frame);

struct KalmanResult {
  GaussianState state;
  double log_likelihood = 0.0;  ///< log N(z; H m, H P H^T + R)
};

/// Gain and posterior covariance of a linear update; both are independent of
/// the observed value, so one set serves every observation of a scan.
struct KalmanGain {
  MatrixX gain;
  MatrixX posterior_covariance;
  Vector2 predicted = Vector2::Zero();
  Matrix2 innovation_covariance = Matrix2::Identity();
};

KalmanGain kalman_gain(const GaussianState& state, const Matrix2& r, Side projection = Side::Left);

/// Linear update with H from disparity_observation_matrix(projection, ...).
/// `projection` is Right only for the right camera of a rectified pair.
KalmanResult kalman_update(const GaussianState& state, const Observation& obs,
                           Side projection = Side::Left);

double predictive_log_likelihood(const GaussianState& state, const Vector2& z, const Matrix2& r,
                                 Side projection = Side::Left);

struct MoveOptions {
  MotionModel model = MotionModel::stationary();
  double elapsed = 0.0;  ///< transition time; 0 maps the belief without motion
  int n_particles = 250;
  const ProjectiveCamera* fov_camera = nullptr;  ///< drop particles outside this image
  std::uint64_t seed = 0;
};

/// Sample, map to the world, apply the motion model, map into `target`, refit.
GaussianState particle_move(const GaussianState& state, const DisparityFrame& source,
                            const DisparityFrame& target, FrameId target_id,
                            const MoveOptions& options);

/// particle_move within one frame over one model step.
GaussianState particle_prediction(const GaussianState& state, const DisparityFrame& frame,
                                  const MotionModel& model, int n_particles, std::uint64_t seed);

/// Particle cloud of a transported belief, one column per particle.
MatrixX transport_particles(const GaussianState& state, const DisparityFrame& source,
                            const DisparityFrame& target, const MoveOptions& options);

enum class RigMode { Rectified, NonRectified };

/// Two physical cameras and the disparity frames filtering runs in: one
/// shared frame for a rectified pair, one companion frame per camera
/// otherwise.
class CameraRig {
 public:
  static CameraRig rectified(const ProjectiveCamera& left, double baseline);
  static CameraRig non_rectified(const ProjectiveCamera& left, const ProjectiveCamera& right,
                                 double abstract_baseline = kDefaultAbstractBaseline);

  RigMode mode() const { return mode_; }
  const ProjectiveCamera& camera(Side side) const { return cameras_[index_of(side)]; }
  FrameId frame_id(Side side) const;
  const DisparityFrame& frame(FrameId id) const { return frames_.at(id.value); }
  const DisparityFrame& frame_of(Side side) const { return frame(frame_id(side)); }
  /// Which row of the rectified pair a camera observes through.
  Side projection(Side side) const { return mode_ == RigMode::Rectified ? side : Side::Left; }
  double abstract_baseline() const { return abstract_baseline_; }

 private:
  RigMode mode_ = RigMode::NonRectified;
  std::vector<ProjectiveCamera> cameras_;
  std::vector<DisparityFrame> frames_;
  double abstract_baseline_ = kDefaultAbstractBaseline;
};

struct SingleObjectParams {
  DisparityPrior disparity_prior;
  std::optional<VelocityPrior> velocity_prior;  ///< present for a moving object
  MotionModel motion = MotionModel::stationary();
  int move_particles = 250;
  int prediction_particles = 500;
  bool fov_truncation = true;
};

struct SingleStep {
  int time = 0;
  Side camera = Side::Left;
  GaussianState state;
  Vector3 estimate = Vector3::Zero();  ///< world MAP: from_disparity(mean)
  bool estimate_valid = true;
};

struct SingleTrackResult {
  std::vector<SingleStep> steps;
  int particle_predictions = 0;
  int particle_moves = 0;
  int kalman_updates = 0;
};

/// Observations are processed in time order, left before right at equal time.
SingleTrackResult track_single(const CameraRig& rig, std::span<const Observation> observations,
                               const SingleObjectParams& params, std::uint64_t seed);

/// Stable time/camera ordering used by every filter.
ObservationSet ordered(std::span<const Observation> observations);

}  // namespace dspace

#endif  // DSPACE_SINGLE_OBJECT_HPP_
