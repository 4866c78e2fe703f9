#include "dspace/baselines.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "dspace/resampling.hpp"

namespace dspace {

namespace {

double image_log_likelihood(const ProjectiveCamera& camera, const Vector3& x, const Observation& obs,
                            const Eigen::LLT<Matrix2>& r_factor, double log_norm) {
  const Vector3 h = camera.matrix() * x.homogeneous();
  if (!(h.z() > kHomogeneousEpsilon)) return -std::numeric_limits<double>::infinity();
  const Vector2 residual = obs.z - h.head<2>() / h.z();
  return log_norm - 0.5 * r_factor.matrixL().solve(residual).squaredNorm();
}

}  // namespace

BaselineResult baseline_pf(const CameraRig& rig, std::span<const Observation> observations,
                           const ParticleFilterParams& params, std::uint64_t seed) {
  params.motion.validate();
  if (params.n_particles < 2) throw Error(ErrorCode::InvalidParameter, "need at least two particles");
  const bool moving = params.velocity_prior.has_value();
  const int n = params.n_particles;
  const ObservationSet stream = ordered(observations);

  BaselineResult result;
  if (stream.empty()) return result;

  Rng rng(seed);
  std::normal_distribution<double> normal;
  MatrixX positions(3, n);
  MatrixX velocities = MatrixX::Zero(3, n);
  std::vector<double> weights(static_cast<std::size_t>(n), 1.0 / n);

  // Initialisation along the first observation's ray.
  const Observation& first = stream.front();
  const DisparityFrame init_frame =
      rectified_companion(rig.camera(first.camera), rig.abstract_baseline(), first.camera);
  {
    const Eigen::Matrix2d l = sampling_factor(first.covariance);
    const double sd_d = std::sqrt(params.disparity_prior.variance);
    const double h = kVelocityStep * params.motion.dt;
    for (int i = 0; i < n;) {
      Vector3 y;
      y.head<2>() = first.z + l * Vector2(normal(rng), normal(rng));
      y.z() = params.disparity_prior.mean + sd_d * normal(rng);
      Vector3 ydot = Vector3::Zero();
      if (moving)
        for (int k = 0; k < 3; ++k)
          ydot(k) = params.velocity_prior->mean(k) + std::sqrt(params.velocity_prior->variance(k)) * normal(rng);
      if (!init_frame.in_front(y)) continue;
      Vector3 x, ahead;
      if (!try_from_disparity(init_frame, y, x)) continue;
      if (moving && !try_from_disparity(init_frame, Vector3(y + h * ydot), ahead)) continue;
      positions.col(i) = x;
      if (moving) velocities.col(i) = (ahead - x) / h;
      ++i;
    }
  }
  Vector3 estimate = Vector3::Zero();
  {
    Vector3 mode;
    const Vector3 y(first.z.x(), first.z.y(), params.disparity_prior.mean);
    estimate = try_from_disparity(init_frame, y, mode) ? mode : Vector3(positions.rowwise().mean());
  }
  result.steps.push_back({first.time, first.camera, estimate, false});

  const double noise_sd = std::sqrt(params.motion.process_noise_variance);
  int last_time = first.time;
  std::vector<double> log_weights(static_cast<std::size_t>(n));
  for (std::size_t k = 1; k < stream.size(); ++k) {
    const Observation& obs = stream[k];
    const double elapsed = (obs.time - last_time) * params.motion.dt;
    last_time = obs.time;
    if (moving && elapsed > 0.0 && params.motion.kind == MotionKind::ConstantVelocity) {
      const double sd = noise_sd * std::sqrt(elapsed / params.motion.dt);
      for (int i = 0; i < n; ++i) {
        positions.col(i) += velocities.col(i) * elapsed;
        for (int a = 0; a < 3; ++a) velocities(a, i) += sd * normal(rng);
      }
    }

    const ProjectiveCamera& camera = rig.camera(obs.camera);
    const Eigen::LLT<Matrix2> r_factor(obs.covariance);
    const double log_norm = -std::log(2.0 * std::numbers::pi) -
                            std::log(r_factor.matrixL().toDenseMatrix().diagonal().prod());
    for (int i = 0; i < n; ++i)
      log_weights[static_cast<std::size_t>(i)] =
          std::log(weights[static_cast<std::size_t>(i)]) +
          image_log_likelihood(camera, positions.col(i), obs, r_factor, log_norm);

    BaselineStep step{obs.time, obs.camera, estimate, false};
    const std::vector<double> normalised = normalise_log_weights(log_weights);
    if (normalised.empty()) {
      // Every particle is incompatible with the observation.
      step.diverged = true;
      ++result.divergences;
      std::fill(weights.begin(), weights.end(), 1.0 / n);
      result.steps.push_back(step);
      continue;
    }
    weights = normalised;
    const auto best = std::max_element(weights.begin(), weights.end()) - weights.begin();
    estimate = positions.col(best);
    step.estimate = estimate;
    result.steps.push_back(step);

    if (effective_sample_size(weights) < params.resample_threshold * n) {
      const std::vector<int> idx = systematic_resample(weights, n, rng);
      MatrixX p(3, n), v(3, n);
      for (int i = 0; i < n; ++i) {
        p.col(i) = positions.col(idx[static_cast<std::size_t>(i)]);
        v.col(i) = velocities.col(idx[static_cast<std::size_t>(i)]);
      }
      positions = std::move(p);
      velocities = std::move(v);
      std::fill(weights.begin(), weights.end(), 1.0 / n);
      ++result.resamplings;
    }
  }
  return result;
}

BaselineResult baseline_inverse_depth_ekf(const CameraRig& rig,
                                          std::span<const Observation> observations,
                                          const InverseDepthParams& params) {
  const ObservationSet stream = ordered(observations);
  BaselineResult result;
  if (stream.empty()) return result;

  const Observation& first = stream.front();
  const ProjectiveCamera& anchor = rig.camera(first.camera);
  const Matrix3 to_world = anchor.pose().rotation();
  const Matrix3 k_inv = anchor.intrinsics().calibration_matrix().inverse();
  const Matrix3 ray_map = to_world * k_inv;  // (u, v, 1) -> ray with unit depth
  const Vector3 centre = anchor.pose().position;
  const double scale =
      rectified_companion(anchor, rig.abstract_baseline(), first.camera).disparity_scale();

  Vector3 theta(first.z.x(), first.z.y(), params.disparity_prior.mean / scale);
  Matrix3 cov = Matrix3::Zero();
  cov.topLeftCorner<2, 2>() = first.covariance;
  cov(2, 2) = params.disparity_prior.variance / (scale * scale);

  auto world_point = [&](const Vector3& t, Vector3& x) {
    if (!(std::abs(t.z()) > kHomogeneousEpsilon)) return false;
    x = centre + ray_map * Vector3(t.x(), t.y(), 1.0) / t.z();
    return x.allFinite();
  };

  Vector3 estimate = Vector3::Zero();
  world_point(theta, estimate);
  result.steps.push_back({first.time, first.camera, estimate, false});

  for (std::size_t k = 1; k < stream.size(); ++k) {
    const Observation& obs = stream[k];
    Vector2 predicted;
    Eigen::Matrix<double, 2, 3> jac;
    if (obs.camera == first.camera) {
      predicted = theta.head<2>();
      jac << 1, 0, 0, 0, 1, 0;
    } else {
      // Homogeneous world point (ray + rho * c, rho) is linear in theta.
      const Matrix34& p = rig.camera(obs.camera).matrix();
      const Matrix3 a = p.leftCols<3>() * ray_map;
      const Vector3 b = p.leftCols<3>() * centre + p.col(3);
      Matrix3 g;
      g.col(0) = a.col(0);
      g.col(1) = a.col(1);
      g.col(2) = b;
      const Vector3 h = a * Vector3(theta.x(), theta.y(), 1.0) + theta.z() * b;
      if (!(std::abs(h.z()) > kHomogeneousEpsilon))
        throw Error(ErrorCode::NumericalDegeneracy, "observation Jacobian is singular");
      predicted = h.head<2>() / h.z();
      jac = (g.topRows<2>() * h.z() - h.head<2>() * g.row(2)) / (h.z() * h.z());
    }
    const Matrix2 s = jac * cov * jac.transpose() + obs.covariance;
    Eigen::LLT<Matrix2> llt(s);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::NumericalDegeneracy, "innovation covariance is not invertible");
    const Eigen::Matrix<double, 3, 2> gain = llt.solve(jac * cov).transpose();
    theta += gain * (obs.z - predicted);
    const Matrix3 joseph = Matrix3::Identity() - gain * jac;
    cov = joseph * cov * joseph.transpose() + gain * obs.covariance * gain.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();

    BaselineStep step{obs.time, obs.camera, estimate, false};
    Vector3 x;
    if (world_point(theta, x)) {
      estimate = x;
      step.estimate = x;
    } else {
      step.diverged = true;
      ++result.divergences;
    }
    result.steps.push_back(step);
  }
  return result;
}

}  // namespace dspace
