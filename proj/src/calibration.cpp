#include "dspace/calibration.hpp"

#include <cmath>
#include <limits>

#include "dspace/parallel.hpp"
#include "dspace/resampling.hpp"

namespace dspace {

Vector6 SensorState::as_vector() const {
  Vector6 v;
  v << position, orientation;
  return v;
}

SensorState SensorState::from_vector(const Vector6& v) { return {v.head<3>(), v.tail<3>()}; }

CameraPose SensorState::pose() const {
  CameraPose p;
  p.position = position;
  p.yaw = orientation.x();
  p.pitch = orientation.y();
  p.roll = orientation.z();
  return p;
}

SensorState SensorState::from_pose(const CameraPose& pose) {
  return {pose.position, Vector3(pose.yaw, pose.pitch, pose.roll)};
}

void CalibrationPrior::validate() const {
  if (particles < 1) throw Error(ErrorCode::InvalidParameter, "calibration needs at least one particle");
  if (!(sd.array() >= 0.0).all() || !sd.allFinite())
    throw Error(ErrorCode::InvalidParameter, "prior standard deviations must be finite and >= 0");
  if (!mean.as_vector().allFinite()) throw Error(ErrorCode::InvalidParameter, "prior mean must be finite");
}

CalibrationRig::CalibrationRig(const ProjectiveCamera& left_camera, const CameraIntrinsics& right,
                               double baseline)
    : left(left_camera),
      right_intrinsics(right),
      abstract_baseline(baseline),
      left_frame_(rectified_companion(left_camera, baseline, Side::Left)) {}

SensorParticle::SensorParticle(const SensorState& state, double w, const CalibrationRig& rig)
    : s(state),
      weight(w),
      conditional{kLeftFrame, {}},
      camera(build_camera(rig.right_intrinsics, state.pose())),
      frame(rectified_companion(camera, rig.abstract_baseline, Side::Right)) {}

Population init_calibration(const CalibrationPrior& prior, const CalibrationRig& rig, std::uint64_t seed) {
  prior.validate();
  Rng rng(seed);
  std::normal_distribution<double> normal;
  const Vector6 mean = prior.mean.as_vector();
  Population population;
  population.reserve(static_cast<std::size_t>(prior.particles));
  for (int k = 0; k < prior.particles; ++k) {
    Vector6 v;
    for (int a = 0; a < 6; ++a) v(a) = mean(a) + prior.sd(a) * normal(rng);
    population.emplace_back(SensorState::from_vector(v), 1.0 / prior.particles, rig);
  }
  return population;
}

double calibration_likelihood(const GaussianMixture& detected, std::span<const Observation> observations,
                              const ClutterModel& clutter) {
  return calibration_log_likelihood(detected, observations, clutter);
}

JointUpdateResult joint_update(Population& population, const Scan& scan, double elapsed,
                               const CalibrationRig& rig, const CalibrationModels& models,
                               std::uint64_t run_seed, int scan_index) {
  const std::size_t m = population.size();
  std::vector<double> log_lik(m, 0.0);
  std::vector<char> failed(m, 0);
  const FrameId target_id = scan.camera == Side::Left ? kLeftFrame : kRightFrame;

  // Common random numbers: every sensor particle draws the same stream for a
  // scan, so likelihood differences reflect geometry rather than sampling noise.
  const std::uint64_t step_seed = phd_step_seed(run_seed, scan_index, 0);
  parallel_for(m, [&](std::size_t k) {
    SensorParticle& p = population[k];
    const DisparityFrame& source = p.conditional.frame == kLeftFrame ? rig.left_frame() : p.frame;
    const DisparityFrame& target = target_id == kLeftFrame ? rig.left_frame() : p.frame;
    try {
      PhdStepResult step = phd_step(p.conditional, source, target, target_id, elapsed, scan.observations,
                                    models.phd, step_seed);
      p.conditional = std::move(step.mixture);
      log_lik[k] = step.log_likelihood;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericalDegeneracy && e.code() != ErrorCode::SingularMapping &&
          e.code() != ErrorCode::PointAtInfinity && e.code() != ErrorCode::DegeneratePrediction)
        throw;
      // A geometry under which the belief cannot be represented explains nothing.
      failed[k] = 1;
      p.conditional = GaussianMixture{target_id, {}};
      log_lik[k] = -std::numeric_limits<double>::infinity();
    }
  });

  JointUpdateResult result;
  for (char f : failed) result.failed_particles += f;
  if (scan.camera == Side::Left && !models.reweight_left) return result;

  std::vector<double> lw(m);
  for (std::size_t k = 0; k < m; ++k) lw[k] = std::log(population[k].weight) + log_lik[k];
  const std::vector<double> w = normalise_log_weights(lw);
  if (w.empty()) throw Error(ErrorCode::NormalisationFailure, "every sensor particle weight underflowed");
  for (std::size_t k = 0; k < m; ++k) population[k].weight = w[k];
  return result;
}

bool resample(Population& population, double fraction, const CalibrationRig& rig, Rng& rng,
              const Vector6& jitter_sd, double bandwidth) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error(ErrorCode::InvalidParameter, "ESS threshold fraction must lie in (0, 1]");
  const int m = static_cast<int>(population.size());
  std::vector<double> w(population.size());
  for (std::size_t k = 0; k < population.size(); ++k) w[k] = population[k].weight;
  if (!(bandwidth >= 0.0 && bandwidth < 1.0))
    throw Error(ErrorCode::InvalidParameter, "kernel bandwidth must lie in [0, 1)");
  if (!(effective_sample_size(w) < fraction * m)) return false;

  const SensorEstimate before = estimate_sensor(population);
  const Vector6 centre = before.mean.as_vector();
  const double shrink = std::sqrt(1.0 - bandwidth * bandwidth);
  const std::vector<int> idx = systematic_resample(w, m, rng);
  Population next;
  next.reserve(population.size());
  const bool jitter = (jitter_sd.array() > 0.0).any() || bandwidth > 0.0;
  std::normal_distribution<double> normal;
  for (int i : idx) {
    const SensorParticle& src = population[static_cast<std::size_t>(i)];
    // The conditional mixture lives in a frame that depends on s unless it is
    // in the left frame, so only then may s move.
    if (jitter && src.conditional.frame == kLeftFrame) {
      Vector6 v = src.s.as_vector();
      if (bandwidth > 0.0) v = shrink * v + (1.0 - shrink) * centre;
      for (int a = 0; a < 6; ++a) v(a) += bandwidth * before.sd(a) * normal(rng) + jitter_sd(a) * normal(rng);
      SensorParticle p(SensorState::from_vector(v), 1.0 / m, rig);
      p.conditional = src.conditional;
      next.push_back(std::move(p));
    } else {
      next.push_back(src);
      next.back().weight = 1.0 / m;
    }
  }
  population = std::move(next);
  return true;
}

SensorEstimate estimate_sensor(const Population& population) {
  SensorEstimate out;
  if (population.empty()) return out;
  double total = 0.0;
  Vector6 mean = Vector6::Zero();
  for (const auto& p : population) {
    mean += p.weight * p.s.as_vector();
    total += p.weight;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::NormalisationFailure, "sensor weights sum to zero");
  mean /= total;
  Vector6 var = Vector6::Zero();
  for (const auto& p : population) var += p.weight * (p.s.as_vector() - mean).cwiseAbs2();
  out.mean = SensorState::from_vector(mean);
  out.sd = (var / total).cwiseSqrt();
  return out;
}

CalibrationResult calibrate(const CalibrationRig& rig, std::span<const Scan> scans,
                            const CalibrationPrior& prior, const CalibrationModels& models,
                            std::uint64_t seed) {
  Population population = init_calibration(prior, rig, derive_seed(seed, {0xca}));
  Rng resample_rng(derive_seed(seed, {0x5e}));
  CalibrationResult result;
  if (scans.empty()) return result;
  int last_time = scans.front().time;
  bool resampled = false;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const Scan& scan = scans[i];
    const double elapsed = (scan.time - last_time) * models.phd.motion.dt;
    if (elapsed < 0.0) throw Error(ErrorCode::InvalidInput, "scans must be in time order");
    last_time = scan.time;
    result.failed_particle_steps +=
        joint_update(population, scan, elapsed, rig, models, seed, static_cast<int>(i)).failed_particles;

    std::vector<double> w(population.size());
    for (std::size_t k = 0; k < population.size(); ++k) w[k] = population[k].weight;
    const double ess = effective_sample_size(w);

    CalibrationStep step;
    step.time = scan.time;
    step.ess = ess;
    step.estimate = estimate_sensor(population);
    const bool last_of_time = i + 1 == scans.size() || scans[i + 1].time != scan.time;
    if (last_of_time) {
      const auto best = std::max_element(w.begin(), w.end()) - w.begin();
      const SensorParticle& p = population[static_cast<std::size_t>(best)];
      const DisparityFrame& frame = p.conditional.frame == kLeftFrame ? rig.left_frame() : p.frame;
      for (const auto& c : p.conditional.components) {
        // Births from this scan carry birth weight only; extraction ignores them.
        if (!(c.weight > models.phd.extraction_threshold)) continue;
        Vector3 x;
        if (try_from_disparity(frame, c.state.position(), x)) step.targets.push_back(x);
      }
    }

    resampled = resample(population, models.ess_threshold, rig, resample_rng, models.jitter_sd,
                         models.kernel_bandwidth) ||
                resampled;
    if (last_of_time) {
      step.resampled = resampled;
      resampled = false;
      result.steps.push_back(std::move(step));
    }
  }
  for (const auto& s : result.steps) result.resamplings += s.resampled ? 1 : 0;
  return result;
}

}  // namespace dspace
