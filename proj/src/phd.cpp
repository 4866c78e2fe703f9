#include "dspace/phd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dspace {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

double GaussianMixture::total_weight() const {
  double w = 0.0;
  for (const auto& c : components) w += c.weight;
  return w;
}

double DetectionModel::probability(const DisparityFrame& frame, const Vector3& y) const {
  if (!frame.in_front(y)) return 0.0;
  if (!(y.x() >= 0.0 && y.x() < width && y.y() >= 0.0 && y.y() < height)) return 0.0;
  return p_inside;
}

PredictResult phd_predict(const GaussianMixture& mixture, const DisparityFrame& source,
                          const DisparityFrame& target, FrameId target_id,
                          const PredictOptions& options, const GaussianMixture& birth) {
  if (!(options.p_survival >= 0.0 && options.p_survival <= 1.0))
    throw Error(ErrorCode::InvalidParameter, "survival probability must lie in [0, 1]");
  PredictResult out;
  out.mixture.frame = target_id;
  const bool still = options.elapsed == 0.0 || options.motion.kind == MotionKind::Static;
  const bool identity = still && mixture.frame == target_id;

  MoveOptions move;
  move.model = options.motion;
  move.elapsed = options.elapsed;
  move.n_particles = options.n_particles;
  for (std::size_t k = 0; k < mixture.components.size(); ++k) {
    const WeightedGaussian& c = mixture.components[k];
    WeightedGaussian moved{c.weight * options.p_survival, c.state};
    if (!identity) {
      move.seed = derive_seed(options.seed, {k});
      try {
        moved.state = particle_move(c.state, source, target, target_id, move);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegeneratePrediction) throw;
        // Every particle fell on the plane at infinity of one of the maps.
        ++out.lost_components;
        continue;
      }
    }
    moved.state.frame = target_id;
    out.mixture.components.push_back(std::move(moved));
  }
  for (const auto& b : birth.components) {
    WeightedGaussian c = b;
    c.state.frame = target_id;
    out.mixture.components.push_back(std::move(c));
  }
  return out;
}

DetectionSplit split_detection(const GaussianMixture& mixture, const DisparityFrame& frame,
                               const DetectionModel& detection, int n_particles, std::uint64_t seed,
                               double fast_path_fraction) {
  if (n_particles < 2) throw Error(ErrorCode::InvalidParameter, "need at least two particles");
  DetectionSplit out;
  out.missed.frame = mixture.frame;
  out.detected.frame = mixture.frame;
  const double p_in = detection.p_inside;

  auto push = [](GaussianMixture& mix, double w, const GaussianState& s) {
    if (w > 0.0) mix.components.push_back({w, s});
  };

  std::vector<double> pd(static_cast<std::size_t>(n_particles));
  std::vector<double> pm(static_cast<std::size_t>(n_particles));
  for (std::size_t k = 0; k < mixture.components.size(); ++k) {
    const WeightedGaussian& c = mixture.components[k];
    const GaussianState& s = c.state;
    Rng rng(derive_seed(seed, {k}));
    const MatrixX samples =
        s.mean.replicate(1, n_particles) + sampling_factor(s.covariance) * standard_normal(rng, s.dim(), n_particles);
    int inside = 0;
    double sum_pd = 0.0;
    for (int i = 0; i < n_particles; ++i) {
      const double p = detection.probability(frame, Vector3(samples.col(i).head<3>()));
      pd[static_cast<std::size_t>(i)] = p;
      pm[static_cast<std::size_t>(i)] = 1.0 - p;
      if (p > 0.0) ++inside;
      sum_pd += p;
    }
    const double frac = static_cast<double>(inside) / n_particles;
    if (frac >= fast_path_fraction) {
      push(out.missed, (1.0 - p_in) * c.weight, s);
      push(out.detected, p_in * c.weight, s);
      continue;
    }
    if (frac <= 1.0 - fast_path_fraction) {
      push(out.missed, c.weight, s);
      continue;
    }
    const double mean_pd = sum_pd / n_particles;
    const double w_detected = c.weight * mean_pd;
    const double w_missed = c.weight - w_detected;
    auto fitted = [&](const std::vector<double>& w) {
      // Too few effective particles give a rank-deficient fit; keep the
      // component's own shape then.
      double sw = 0.0, sw2 = 0.0;
      for (double x : w) {
        sw += x;
        sw2 += x * x;
      }
      if (!(sw > 0.0) || sw * sw / sw2 < 4.0 * s.dim()) return s;
      try {
        const MomentFit fit = fit_weighted_moments(samples, w);
        return GaussianState{fit.mean, make_spd(fit.covariance), s.frame};
      } catch (const Error&) {
        return s;
      }
    };
    if (w_missed > 0.0) push(out.missed, w_missed, fitted(pm));
    if (w_detected > 0.0) push(out.detected, w_detected, fitted(pd));
  }
  return out;
}

GaussianMixture phd_update(const GaussianMixture& missed, const GaussianMixture& detected,
                           std::span<const Observation> observations, const ClutterModel& clutter,
                           UpdateTerms* terms, double min_weight) {
  GaussianMixture out = missed;
  out.frame = detected.empty() ? missed.frame : detected.frame;
  const std::size_t n_comp = detected.components.size();
  const std::size_t n_obs = observations.size();

  // Gains depend only on the observation covariance; scans normally share one.
  std::vector<KalmanGain> gains(n_comp);
  Matrix2 gain_r = Matrix2::Constant(std::numeric_limits<double>::quiet_NaN());
  auto refresh = [&](const Matrix2& r) {
    if (r == gain_r) return;
    for (std::size_t k = 0; k < n_comp; ++k) gains[k] = kalman_gain(detected.components[k].state, r);
    gain_r = r;
  };

  const double log_clutter = clutter.lambda > 0.0 ? std::log(clutter.intensity()) : kNegInf;
  if (terms != nullptr) {
    terms->clutter_share.assign(n_obs, 0.0);
    terms->denominators.assign(n_obs, 0.0);
    terms->log_denominators.assign(n_obs, 0.0);
    terms->detected_weight = detected.total_weight();
  }

  std::vector<double> log_wq(n_comp);
  for (std::size_t j = 0; j < n_obs; ++j) {
    const Observation& obs = observations[j];
    refresh(obs.covariance);
    double log_den = log_clutter;
    for (std::size_t k = 0; k < n_comp; ++k) {
      const double w = detected.components[k].weight;
      log_wq[k] = w > 0.0 ? std::log(w) + gaussian_log_pdf(obs.z, gains[k].predicted,
                                                             gains[k].innovation_covariance)
                          : kNegInf;
      log_den = log_sum_exp(log_den, log_wq[k]);
    }
    if (terms != nullptr) {
      terms->log_denominators[j] = log_den;
      terms->denominators[j] = std::exp(log_den);
      terms->clutter_share[j] = log_den == kNegInf ? 0.0 : std::exp(log_clutter - log_den);
    }
    if (log_den == kNegInf) continue;
    for (std::size_t k = 0; k < n_comp; ++k) {
      const double w = std::exp(log_wq[k] - log_den);
      if (!(w > 0.0) || w < min_weight) continue;
      const GaussianState& prior = detected.components[k].state;
      GaussianState post;
      post.frame = prior.frame;
      post.mean = prior.mean + gains[k].gain * (obs.z - gains[k].predicted);
      post.covariance = gains[k].posterior_covariance;
      out.components.push_back({w, std::move(post)});
    }
  }
  return out;
}

GaussianMixture birth_from_observations(std::span<const Observation> observations,
                                        const DisparityPrior& disparity_prior,
                                        const std::optional<VelocityPrior>& velocity_prior,
                                        double birth_weight, FrameId frame) {
  GaussianMixture out;
  out.frame = frame;
  for (const Observation& z : observations)
    out.components.push_back({birth_weight, initialise(z, disparity_prior, velocity_prior, frame)});
  return out;
}

GaussianMixture prune_merge(const GaussianMixture& mixture, double prune_threshold,
                            double merge_distance, int max_components) {
  if (!(prune_threshold >= 0.0) || !(merge_distance >= 0.0) || max_components < 1)
    throw Error(ErrorCode::InvalidParameter, "prune/merge thresholds must be positive");
  GaussianMixture out;
  out.frame = mixture.frame;

  std::vector<std::size_t> alive;
  for (std::size_t k = 0; k < mixture.components.size(); ++k)
    if (mixture.components[k].weight >= prune_threshold) alive.push_back(k);
  // Heaviest first; index breaks ties so the result is order-stable.
  std::stable_sort(alive.begin(), alive.end(), [&](std::size_t a, std::size_t b) {
    return mixture.components[a].weight > mixture.components[b].weight;
  });

  std::vector<Eigen::LDLT<MatrixX>> factors(mixture.components.size());
  for (std::size_t k : alive) factors[k].compute(mixture.components[k].state.covariance);

  std::vector<bool> used(mixture.components.size(), false);
  for (std::size_t head : alive) {
    if (used[head]) continue;
    const WeightedGaussian& lead = mixture.components[head];
    const Eigen::LDLT<MatrixX>& ldlt = factors[head];
    std::vector<std::size_t> group;
    for (std::size_t k : alive) {
      if (used[k]) continue;
      if (k == head) {
        group.push_back(k);
        continue;
      }
      // The distance must also hold in the lighter component's metric, so a
      // broad component cannot swallow sharp ones far from its mean.
      const VectorX diff = mixture.components[k].state.mean - lead.state.mean;
      if (diff.dot(ldlt.solve(diff)) >= merge_distance) continue;
      if (diff.dot(factors[k].solve(diff)) >= merge_distance) continue;
      group.push_back(k);
    }
    for (std::size_t k : group) used[k] = true;
    if (group.size() == 1) {
      out.components.push_back(lead);
      continue;
    }
    WeightedGaussian merged;
    merged.state.frame = lead.state.frame;
    merged.state.mean = VectorX::Zero(lead.state.dim());
    for (std::size_t k : group) {
      merged.weight += mixture.components[k].weight;
      merged.state.mean += mixture.components[k].weight * mixture.components[k].state.mean;
    }
    merged.state.mean /= merged.weight;
    merged.state.covariance = MatrixX::Zero(lead.state.dim(), lead.state.dim());
    for (std::size_t k : group) {
      const auto& c = mixture.components[k];
      const VectorX diff = c.state.mean - merged.state.mean;
      merged.state.covariance += c.weight * (c.state.covariance + diff * diff.transpose());
    }
    merged.state.covariance = make_spd(merged.state.covariance / merged.weight);
    out.components.push_back(std::move(merged));
  }
  std::stable_sort(out.components.begin(), out.components.end(),
                   [](const WeightedGaussian& a, const WeightedGaussian& b) { return a.weight > b.weight; });
  if (out.components.size() > static_cast<std::size_t>(max_components))
    out.components.resize(static_cast<std::size_t>(max_components));
  return out;
}

Extraction extract_targets(const GaussianMixture& mixture, double weight_threshold) {
  Extraction out;
  for (const auto& c : mixture.components)
    if (c.weight > weight_threshold) out.targets.push_back(c);
  out.cardinality = static_cast<int>(std::lround(mixture.total_weight()));
  return out;
}

double calibration_log_likelihood(const GaussianMixture& detected,
                                  std::span<const Observation> observations,
                                  const ClutterModel& clutter) {
  UpdateTerms terms;
  phd_update(GaussianMixture{detected.frame, {}}, detected, observations, clutter, &terms,
             std::numeric_limits<double>::infinity());
  double ll = -clutter.lambda - terms.detected_weight;
  for (double l : terms.log_denominators) ll += l;
  return ll;
}

PhdStepResult phd_step(const GaussianMixture& mixture, const DisparityFrame& source,
                       const DisparityFrame& target, FrameId target_id, double elapsed,
                       std::span<const Observation> observations, const PhdModels& models,
                       std::uint64_t seed) {
  PredictOptions predict;
  predict.p_survival = elapsed > 0.0 ? models.p_survival : 1.0;
  predict.motion = models.motion;
  predict.elapsed = elapsed;
  predict.n_particles = models.move_particles;
  predict.seed = derive_seed(seed, {0});
  PredictResult predicted = phd_predict(mixture, source, target, target_id, predict, {target_id, {}});

  const DetectionSplit split = split_detection(predicted.mixture, target, models.detection,
                                               models.split_particles, derive_seed(seed, {1}),
                                               models.fast_path_fraction);
  UpdateTerms terms;
  const GaussianMixture updated = phd_update(split.missed, split.detected, observations, models.clutter,
                                             &terms, models.prune_threshold);

  PhdStepResult out;
  out.lost_components = predicted.lost_components;
  out.log_likelihood = -models.clutter.lambda - terms.detected_weight;
  for (double l : terms.log_denominators) out.log_likelihood += l;
  out.mixture = prune_merge(updated, models.prune_threshold, models.merge_distance, models.max_components);
  out.mixture.frame = target_id;
  out.extraction = extract_targets(out.mixture, models.extraction_threshold);
  const GaussianMixture birth = birth_from_observations(observations, models.disparity_prior,
                                                        models.velocity_prior, models.birth_weight, target_id);
  out.mixture.components.insert(out.mixture.components.end(), birth.components.begin(),
                                birth.components.end());
  return out;
}

std::uint64_t phd_step_seed(std::uint64_t run_seed, int scan, int particle) {
  return derive_seed(run_seed, {0x9d, static_cast<std::uint64_t>(scan), static_cast<std::uint64_t>(particle)});
}

PhdTrackResult phd_track(const CameraRig& rig, std::span<const Scan> scans, const PhdModels& models,
                         std::uint64_t seed) {
  if (rig.mode() != RigMode::NonRectified)
    throw Error(ErrorCode::InvalidInput, "the PHD filter runs on companion frames of a non-rectified rig");
  PhdTrackResult result;
  if (scans.empty()) return result;
  GaussianMixture mixture{rig.frame_id(scans.front().camera), {}};
  int last_time = scans.front().time;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const Scan& scan = scans[i];
    const FrameId target = rig.frame_id(scan.camera);
    const double elapsed = (scan.time - last_time) * models.motion.dt;
    if (elapsed < 0.0) throw Error(ErrorCode::InvalidInput, "scans must be in time order");
    last_time = scan.time;
    PhdStepResult step = phd_step(mixture, rig.frame(mixture.frame), rig.frame(target), target, elapsed,
                                  scan.observations, models, phd_step_seed(seed, static_cast<int>(i), 0));
    result.lost_components += step.lost_components;
    mixture = std::move(step.mixture);

    if (i + 1 < scans.size() && scans[i + 1].time == scan.time) continue;
    PhdTimeStep out;
    out.time = scan.time;
    out.cardinality = step.extraction.cardinality;
    out.components = mixture.size();
    for (const auto& t : step.extraction.targets) {
      Vector3 x;
      if (!try_from_disparity(rig.frame(target), t.state.position(), x)) continue;
      out.estimates.push_back(x);
      out.weights.push_back(t.weight);
    }
    result.steps.push_back(std::move(out));
  }
  return result;
}

}  // namespace dspace
