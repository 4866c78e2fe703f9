#include "dspace/single_object.hpp"

#include <algorithm>
#include <cmath>

namespace dspace {

void MotionModel::validate() const {
  if (!(process_noise_variance >= 0.0) || !std::isfinite(process_noise_variance))
    throw Error(ErrorCode::InvalidParameter, "process noise variance must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidParameter, "dt must be > 0");
}

GaussianState initialise(const Observation& obs, const DisparityPrior& disparity_prior,
                         const std::optional<VelocityPrior>& velocity_prior, FrameId frame) {
  const int dim = velocity_prior ? 6 : 3;
  GaussianState state{VectorX::Zero(dim), MatrixX::Zero(dim, dim), frame};
  state.mean.head<2>() = obs.z;
  state.mean(2) = disparity_prior.mean;
  state.covariance.topLeftCorner<2, 2>() = obs.covariance;
  state.covariance(2, 2) = disparity_prior.variance;
  if (velocity_prior) {
    state.mean.tail<3>() = velocity_prior->mean;
    state.covariance.bottomRightCorner<3, 3>() = velocity_prior->variance.asDiagonal();
  }
  return state;
}

KalmanGain kalman_gain(const GaussianState& state, const Matrix2& r, Side projection) {
  const MatrixX h = disparity_observation_matrix(projection, state.dynamic());
  KalmanGain out;
  out.predicted = h * state.mean;
  out.innovation_covariance = h * state.covariance * h.transpose() + r;
  out.innovation_covariance = symmetrised(out.innovation_covariance);
  Eigen::LLT<Matrix2> llt(out.innovation_covariance);
  if (llt.info() != Eigen::Success || !out.innovation_covariance.allFinite())
    throw Error(ErrorCode::NumericalDegeneracy, "innovation covariance is not invertible");
  const MatrixX pht = state.covariance * h.transpose();
  out.gain = llt.solve(pht.transpose()).transpose();
  const MatrixX joseph = MatrixX::Identity(state.dim(), state.dim()) - out.gain * h;
  out.posterior_covariance = make_spd(joseph * state.covariance * joseph.transpose() +
                                      out.gain * r * out.gain.transpose());
  return out;
}

KalmanResult kalman_update(const GaussianState& state, const Observation& obs, Side projection) {
  const KalmanGain k = kalman_gain(state, obs.covariance, projection);
  KalmanResult result;
  result.state.frame = state.frame;
  result.state.mean = state.mean + k.gain * (obs.z - k.predicted);
  result.state.covariance = k.posterior_covariance;
  result.log_likelihood = gaussian_log_pdf(obs.z, k.predicted, k.innovation_covariance);
  return result;
}

double predictive_log_likelihood(const GaussianState& state, const Vector2& z, const Matrix2& r,
                                 Side projection) {
  const MatrixX h = disparity_observation_matrix(projection, state.dynamic());
  const Matrix2 s = symmetrised(h * state.covariance * h.transpose() + r);
  return gaussian_log_pdf(z, h * state.mean, s);
}

namespace {

template <int Dim>
MatrixX transport(const GaussianState& state, const DisparityFrame& source,
                  const DisparityFrame& target, const MoveOptions& options) {
  using Vec = Eigen::Matrix<double, Dim, 1>;
  using Mat = Eigen::Matrix<double, Dim, Dim>;
  constexpr bool kMoving = Dim == 6;

  const Vec mean = state.mean;
  const Mat factor = sampling_factor(state.covariance);
  // Velocities are carried through the point maps by short finite
  // differences (a tangent map). A secant over a whole step blows up for
  // far points whose disparity is close to zero.
  const double h = kVelocityStep * options.model.dt;
  const bool transition =
      kMoving && options.elapsed > 0.0 && options.model.kind == MotionKind::ConstantVelocity;
  const double noise_sd =
      transition ? std::sqrt(options.model.process_noise_variance * options.elapsed / options.model.dt)
                 : 0.0;

  Rng rng(options.seed);
  std::normal_distribution<double> normal;
  MatrixX cloud(Dim, options.n_particles);
  int kept = 0;
  for (int i = 0; i < options.n_particles; ++i) {
    Vec e;
    for (int k = 0; k < Dim; ++k) e(k) = normal(rng);
    Vector3 noise = Vector3::Zero();
    if (transition)
      for (int k = 0; k < 3; ++k) noise(k) = noise_sd * normal(rng);

    const Vec y = mean + factor * e;
    // Points behind either camera are not what the cameras can see.
    if (!source.in_front(Vector3(y.template head<3>()))) continue;
    Vector3 x;
    if (!try_from_disparity(source, Vector3(y.template head<3>()), x)) continue;
    Vector3 v = Vector3::Zero();
    if constexpr (kMoving) {
      const Vector3 y_ahead = y.template head<3>() + h * y.template tail<3>();
      Vector3 ahead;
      if (!source.in_front(y_ahead) || !try_from_disparity(source, y_ahead, ahead)) continue;
      v = (ahead - x) / h;
    }
    if (transition) {
      x += v * options.elapsed;
      v += noise;
    }
    if (options.fov_camera != nullptr) {
      const ProjectiveCamera& cam = *options.fov_camera;
      if (!(cam.depth(x) > kHomogeneousEpsilon)) continue;
      const Vector3 hom = cam.matrix() * x.homogeneous();
      if (!cam.in_image(Vector2(hom.head<2>() / hom.z()))) continue;
    }
    Vector3 moved;
    if (!try_to_disparity(target, x, moved) || !target.in_front(moved)) continue;
    cloud.col(kept).template head<3>() = moved;
    if constexpr (kMoving) {
      Vector3 ahead;
      if (!try_to_disparity(target, Vector3(x + h * v), ahead) || !target.in_front(ahead)) continue;
      cloud.col(kept).template tail<3>() = (ahead - moved) / h;
    }
    ++kept;
  }
  cloud.conservativeResize(Dim, kept);
  return cloud;
}

}  // namespace

MatrixX transport_particles(const GaussianState& state, const DisparityFrame& source,
                            const DisparityFrame& target, const MoveOptions& options) {
  options.model.validate();
  if (options.n_particles < 2) throw Error(ErrorCode::InvalidParameter, "need at least two particles");
  if (!(options.elapsed >= 0.0)) throw Error(ErrorCode::InvalidParameter, "elapsed time must be >= 0");
  if (state.dim() == 6) return transport<6>(state, source, target, options);
  if (state.dim() == 3) {
    if (options.model.kind == MotionKind::ConstantVelocity && options.elapsed > 0.0)
      throw Error(ErrorCode::InvalidInput, "constant-velocity motion needs a 6-D state");
    return transport<3>(state, source, target, options);
  }
  throw Error(ErrorCode::InvalidInput, "state must be 3-D or 6-D");
}

GaussianState particle_move(const GaussianState& state, const DisparityFrame& source,
                            const DisparityFrame& target, FrameId target_id,
                            const MoveOptions& options) {
  const MatrixX cloud = transport_particles(state, source, target, options);
  if (cloud.cols() < 2) {
    if (options.fov_camera != nullptr)
      throw Error(ErrorCode::TargetLeftFov, "fewer than two particles inside the field of view");
    throw Error(ErrorCode::DegeneratePrediction, "fewer than two particles survived the mapping");
  }
  const MomentFit fit = fit_moments(cloud);
  return GaussianState{fit.mean, make_spd(fit.covariance), target_id};
}

GaussianState particle_prediction(const GaussianState& state, const DisparityFrame& frame,
                                  const MotionModel& model, int n_particles, std::uint64_t seed) {
  if (!state.dynamic()) throw Error(ErrorCode::InvalidInput, "particle prediction needs a 6-D state");
  MoveOptions options;
  options.model = model;
  options.elapsed = model.dt;
  options.n_particles = n_particles;
  options.seed = seed;
  return particle_move(state, frame, frame, state.frame, options);
}

CameraRig CameraRig::rectified(const ProjectiveCamera& left, double baseline) {
  CameraRig rig;
  rig.mode_ = RigMode::Rectified;
  auto [right, frame] = make_rectified_pair(left, baseline);
  rig.cameras_ = {left, right};
  rig.frames_ = {frame};
  rig.abstract_baseline_ = baseline;
  return rig;
}

CameraRig CameraRig::non_rectified(const ProjectiveCamera& left, const ProjectiveCamera& right,
                                   double abstract_baseline) {
  CameraRig rig;
  rig.mode_ = RigMode::NonRectified;
  rig.cameras_ = {left, right};
  rig.frames_ = {rectified_companion(left, abstract_baseline, Side::Left),
                 rectified_companion(right, abstract_baseline, Side::Right)};
  rig.abstract_baseline_ = abstract_baseline;
  return rig;
}

FrameId CameraRig::frame_id(Side side) const {
  return mode_ == RigMode::Rectified ? FrameId{0} : FrameId{index_of(side)};
}

ObservationSet flatten(std::span<const Scan> scans) {
  ObservationSet out;
  for (const Scan& scan : scans) out.insert(out.end(), scan.observations.begin(), scan.observations.end());
  return out;
}

ObservationSet ordered(std::span<const Observation> observations) {
  ObservationSet out(observations.begin(), observations.end());
  std::stable_sort(out.begin(), out.end(), [](const Observation& a, const Observation& b) {
    if (a.time != b.time) return a.time < b.time;
    return index_of(a.camera) < index_of(b.camera);
  });
  return out;
}

SingleTrackResult track_single(const CameraRig& rig, std::span<const Observation> observations,
                               const SingleObjectParams& params, std::uint64_t seed) {
  params.motion.validate();
  const bool moving = params.velocity_prior.has_value();
  if (params.motion.kind == MotionKind::ConstantVelocity && !moving)
    throw Error(ErrorCode::InvalidParameter, "a constant-velocity model needs a velocity prior");

  SingleTrackResult result;
  GaussianState state;
  int last_time = 0;
  const ObservationSet stream = ordered(observations);
  for (std::size_t k = 0; k < stream.size(); ++k) {
    const Observation& obs = stream[k];
    const FrameId frame_id = rig.frame_id(obs.camera);
    if (k == 0) {
      state = initialise(obs, params.disparity_prior, params.velocity_prior, frame_id);
    } else {
      const double elapsed = (obs.time - last_time) * params.motion.dt;
      const bool still = params.motion.kind == MotionKind::Static || elapsed == 0.0;
      GaussianState predicted = state;
      const std::uint64_t step_seed = derive_seed(seed, {k});
      if (frame_id == state.frame) {
        if (!still) {
          predicted = particle_prediction(state, rig.frame(frame_id), params.motion,
                                          params.prediction_particles, step_seed);
          ++result.particle_predictions;
        }
      } else {
        MoveOptions options;
        options.model = params.motion;
        options.elapsed = still ? 0.0 : elapsed;
        options.n_particles = params.move_particles;
        options.fov_camera = params.fov_truncation ? &rig.camera(obs.camera) : nullptr;
        options.seed = step_seed;
        predicted = particle_move(state, rig.frame(state.frame), rig.frame(frame_id), frame_id, options);
        ++result.particle_moves;
      }
      state = kalman_update(predicted, obs, rig.projection(obs.camera)).state;
      ++result.kalman_updates;
    }
    last_time = obs.time;

    SingleStep step{obs.time, obs.camera, state, Vector3::Zero(), true};
    Vector3 x;
    step.estimate_valid = try_from_disparity(rig.frame(state.frame), state.position(), x);
    if (step.estimate_valid) step.estimate = x;
    result.steps.push_back(std::move(step));
  }
  return result;
}

}  // namespace dspace
