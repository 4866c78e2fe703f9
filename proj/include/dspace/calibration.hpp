#ifndef DSPACE_CALIBRATION_HPP_
#define DSPACE_CALIBRATION_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dspace/phd.hpp"

namespace dspace {

/// Right-camera extrinsics: position (cm) and (yaw, pitch, roll) in radians.
struct SensorState {
  Vector3 position = Vector3::Zero();
  Vector3 orientation = Vector3::Zero();

  Vector6 as_vector() const;
  static SensorState from_vector(const Vector6& v);
  CameraPose pose() const;
  static SensorState from_pose(const CameraPose& pose);
};

struct CalibrationPrior {
  SensorState mean;
  Vector6 sd = Vector6::Zero();  ///< (x, y, z, yaw, pitch, roll)
  int particles = 1500;

  void validate() const;
};

/// Fixed part of the calibration problem: the left camera defines the world
/// origin, the right camera's intrinsics are known.
struct CalibrationRig {
  ProjectiveCamera left;
  CameraIntrinsics right_intrinsics;
  double abstract_baseline = kDefaultAbstractBaseline;

  CalibrationRig(const ProjectiveCamera& left_camera, const CameraIntrinsics& right,
                 double baseline = kDefaultAbstractBaseline);
  const DisparityFrame& left_frame() const { return left_frame_; }

 private:
  DisparityFrame left_frame_;
};

/// One hypothesis on the right camera with the object PHD conditioned on it.
struct SensorParticle {
  SensorState s;
  double weight = 0.0;
  GaussianMixture conditional;
  ProjectiveCamera camera;  ///< right camera under s
  DisparityFrame frame;     ///< its companion frame

  SensorParticle(const SensorState& state, double w, const CalibrationRig& rig);
};

using Population = std::vector<SensorParticle>;

inline constexpr FrameId kLeftFrame{0};
inline constexpr FrameId kRightFrame{1};

struct CalibrationModels {
  PhdModels phd = [] {
    PhdModels m;
    m.max_components = 50;
    return m;
  }();
  double ess_threshold = 0.5;
  Vector6 jitter_sd = Vector6::Zero();  ///< post-resampling perturbation of s
  /// Kernel shrinkage after resampling: s <- a s + (1 - a) mean + h sd e with
  /// a = sqrt(1 - h^2), which keeps the population mean and spread.
  double kernel_bandwidth = 0.0;
  bool reweight_left = true;            ///< false: only right-camera scans reweight
};

Population init_calibration(const CalibrationPrior& prior, const CalibrationRig& rig, std::uint64_t seed);

/// log L^c for a particle whose conditional mixture has already been
/// predicted and split; `detected` is its detected part.
double calibration_likelihood(const GaussianMixture& detected, std::span<const Observation> observations,
                              const ClutterModel& clutter);

struct JointUpdateResult {
  int failed_particles = 0;  ///< particles whose step failed numerically (weight set to 0)
};

/// Per-particle PHD step for one scan, then reweighting by L^c and
/// normalisation. Throws NormalisationFailure if every weight underflows.
JointUpdateResult joint_update(Population& population, const Scan& scan, double elapsed,
                               const CalibrationRig& rig, const CalibrationModels& models,
                               std::uint64_t run_seed, int scan_index);

/// Systematic resampling when ESS < fraction * M, then kernel shrinkage with
/// bandwidth h and additive jitter for particles whose mixture is in the left
/// frame. Returns true if it resampled.
bool resample(Population& population, double fraction, const CalibrationRig& rig, Rng& rng,
              const Vector6& jitter_sd = Vector6::Zero(), double bandwidth = 0.0);

struct SensorEstimate {
  SensorState mean;
  Vector6 sd = Vector6::Zero();
};

SensorEstimate estimate_sensor(const Population& population);

struct CalibrationStep {
  int time = 0;
  SensorEstimate estimate;
  double ess = 0.0;
  bool resampled = false;
  std::vector<Vector3> targets;  ///< world estimates under the heaviest particle
};

struct CalibrationResult {
  std::vector<CalibrationStep> steps;
  int resamplings = 0;
  int failed_particle_steps = 0;
};

CalibrationResult calibrate(const CalibrationRig& rig, std::span<const Scan> scans,
                            const CalibrationPrior& prior, const CalibrationModels& models,
                            std::uint64_t seed);

}  // namespace dspace

#endif  // DSPACE_CALIBRATION_HPP_
