#ifndef DSPACE_BASELINES_HPP_
#define DSPACE_BASELINES_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dspace/single_object.hpp"

namespace dspace {

struct BaselineStep {
  int time = 0;
  Side camera = Side::Left;
  Vector3 estimate = Vector3::Zero();
  bool diverged = false;
};

struct BaselineResult {
  std::vector<BaselineStep> steps;
  int divergences = 0;
  int resamplings = 0;
};

/// Bootstrap particle filter in world coordinates (position, or position
/// and velocity). Initialised along the ray of the first observation with
/// depths drawn from the disparity prior of that camera's companion frame.
struct ParticleFilterParams {
  int n_particles = 1000;
  DisparityPrior disparity_prior;
  std::optional<VelocityPrior> velocity_prior;
  MotionModel motion = MotionModel::stationary();
  double resample_threshold = 0.5;  ///< resample when ESS < threshold * n
};

BaselineResult baseline_pf(const CameraRig& rig, std::span<const Observation> observations,
                           const ParticleFilterParams& params, std::uint64_t seed);

/// EKF over (u, v, rho) anchored on the first observing camera: rho is the
/// inverse depth along the pixel ray. The disparity prior is converted with
/// rho = d / (fu * b*) of the anchor's companion frame.
struct InverseDepthParams {
  DisparityPrior disparity_prior;
};

BaselineResult baseline_inverse_depth_ekf(const CameraRig& rig,
                                          std::span<const Observation> observations,
                                          const InverseDepthParams& params);

}  // namespace dspace

#endif  // DSPACE_BASELINES_HPP_
