#ifndef DSPACE_PHD_HPP_
#define DSPACE_PHD_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dspace/single_object.hpp"

namespace dspace {

struct WeightedGaussian {
  double weight = 0.0;
  GaussianState state;
};

/// Gaussian-mixture intensity. Total weight is the expected object count.
struct GaussianMixture {
  FrameId frame;
  std::vector<WeightedGaussian> components;

  double total_weight() const;
  std::size_t size() const { return components.size(); }
  bool empty() const { return components.empty(); }
};

/// Poisson clutter, uniform over the image rectangle.
struct ClutterModel {
  double lambda = 10.0;
  double width = 800.0;
  double height = 600.0;

  double density() const { return 1.0 / (width * height); }
  double intensity() const { return lambda * density(); }
};

/// p_D = p_inside for points in front of the camera that project inside
/// [0, W) x [0, H); 0 otherwise.
struct DetectionModel {
  double p_inside = 0.95;
  double width = 800.0;
  double height = 600.0;

  double probability(const DisparityFrame& frame, const Vector3& y) const;
};

struct PhdModels {
  double p_survival = 0.99;
  MotionModel motion = MotionModel::constant_velocity(0.08);
  DisparityPrior disparity_prior;
  std::optional<VelocityPrior> velocity_prior = VelocityPrior{};
  double birth_weight = 0.1;
  ClutterModel clutter;
  DetectionModel detection;
  Matrix2 observation_covariance = Matrix2::Identity() * 2.0;
  double prune_threshold = 1e-6;
  double merge_distance = 7.0;
  int max_components = 200;
  double extraction_threshold = 0.5;
  int move_particles = 250;
  int split_particles = 250;
  double fast_path_fraction = 0.999;
};

struct PredictOptions {
  double p_survival = 1.0;
  MotionModel motion = MotionModel::stationary();
  double elapsed = 0.0;
  int n_particles = 250;
  std::uint64_t seed = 0;
};

struct PredictResult {
  GaussianMixture mixture;
  int lost_components = 0;  ///< components whose move had no surviving particle
};

/// Move every component into `target` (composing motion when elapsed > 0),
/// scale weights by p_S, append `birth`.
PredictResult phd_predict(const GaussianMixture& mixture, const DisparityFrame& source,
                          const DisparityFrame& target, FrameId target_id,
                          const PredictOptions& options, const GaussianMixture& birth);

struct DetectionSplit {
  GaussianMixture missed;
  GaussianMixture detected;
};

/// Split each component by the state-dependent detection probability.
/// Components almost surely inside (or outside) the field of view keep their
/// Gaussian and only have their weight scaled.
DetectionSplit split_detection(const GaussianMixture& mixture, const DisparityFrame& frame,
                               const DetectionModel& detection, int n_particles,
                               std::uint64_t seed, double fast_path_fraction = 0.999);

/// Per-observation terms of the update, kept for bookkeeping and for the
/// calibration likelihood.
struct UpdateTerms {
  std::vector<double> clutter_share;  ///< lambda c(z) / denominator, per z
  std::vector<double> denominators;   ///< lambda c(z) + sum_k w_k q_k(z), per z
  std::vector<double> log_denominators;
  double detected_weight = 0.0;       ///< integral of the detected intensity
};

/// PHD update: missed components unchanged plus, for every observation, each
/// detected component Kalman-updated and weighted by w q(z) / (lambda c(z) +
/// sum w q(z)). Updated components lighter than `min_weight` are not
/// materialised (their share still enters the bookkeeping).
GaussianMixture phd_update(const GaussianMixture& missed, const GaussianMixture& detected,
                           std::span<const Observation> observations, const ClutterModel& clutter,
                           UpdateTerms* terms = nullptr, double min_weight = 0.0);

/// One component per observation, built like single-object initialisation.
GaussianMixture birth_from_observations(std::span<const Observation> observations,
                                        const DisparityPrior& disparity_prior,
                                        const std::optional<VelocityPrior>& velocity_prior,
                                        double birth_weight, FrameId frame);

/// Drop components below `prune_threshold`; merge groups within squared
/// Mahalanobis distance `merge_distance` of the heaviest remaining component,
/// measured in its covariance and in the candidate's; keep at most
/// `max_components` by weight.
GaussianMixture prune_merge(const GaussianMixture& mixture, double prune_threshold,
                            double merge_distance, int max_components);

struct Extraction {
  std::vector<WeightedGaussian> targets;
  int cardinality = 0;  ///< round(total weight)
};

Extraction extract_targets(const GaussianMixture& mixture, double weight_threshold = 0.5);

/// log L^c(Z | s) = -lambda - integral(mu_detected) + sum_z log(lambda c(z) +
/// sum_k w_k q_k(z)).
double calibration_log_likelihood(const GaussianMixture& detected,
                                  std::span<const Observation> observations,
                                  const ClutterModel& clutter);

/// One camera step of the recursion: predict into the observing camera's
/// frame, split, update, prune/merge, extract, then append births.
struct PhdStepResult {
  GaussianMixture mixture;  ///< posterior with this step's births appended
  Extraction extraction;    ///< extracted before births are added
  double log_likelihood = 0.0;  ///< calibration likelihood of this step's observations
  int lost_components = 0;
};

PhdStepResult phd_step(const GaussianMixture& mixture, const DisparityFrame& source,
                       const DisparityFrame& target, FrameId target_id, double elapsed,
                       std::span<const Observation> observations, const PhdModels& models,
                       std::uint64_t seed);

struct PhdTimeStep {
  int time = 0;
  std::vector<Vector3> estimates;  ///< world positions of extracted targets
  std::vector<double> weights;
  int cardinality = 0;
  std::size_t components = 0;
};

struct PhdTrackResult {
  std::vector<PhdTimeStep> steps;
  int lost_components = 0;
};

/// Sequential per-camera GM-PHD over a non-rectified rig. Estimates are
/// reported after the last camera of each time step.
PhdTrackResult phd_track(const CameraRig& rig, std::span<const Scan> scans,
                         const PhdModels& models, std::uint64_t seed);

/// Seed used by phd_step for a given (run, scan index, sensor particle).
std::uint64_t phd_step_seed(std::uint64_t run_seed, int scan, int particle);

}  // namespace dspace

#endif  // DSPACE_PHD_HPP_
