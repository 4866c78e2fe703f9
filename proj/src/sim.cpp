#include "dspace/sim.hpp"

#include <algorithm>
#include <cmath>

namespace dspace {

void ScenarioConfig::validate() const {
  left_intrinsics.validate();
  right_intrinsics.validate();
  left_pose.validate();
  right_pose.validate();
  if (n_steps < 1) throw Error(ErrorCode::ConfigError, "n_steps must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "dt must be > 0");
  if (!(noise_variance.array() > 0.0).all()) throw Error(ErrorCode::ConfigError, "noise variances must be > 0");
  if (!(p_detection >= 0.0 && p_detection <= 1.0))
    throw Error(ErrorCode::ConfigError, "p_detection must lie in [0, 1]");
  if (!(clutter_lambda >= 0.0)) throw Error(ErrorCode::ConfigError, "clutter lambda must be >= 0");
  if (!(truth_velocity_noise >= 0.0)) throw Error(ErrorCode::ConfigError, "truth velocity noise must be >= 0");
  for (const auto& o : objects)
    if (!o.position.allFinite() || !o.velocity.allFinite())
      throw Error(ErrorCode::ConfigError, "object positions and velocities must be finite");
}

GroundTruth generate_truth(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const std::array<ProjectiveCamera, 2> cams{config.left_camera(), config.right_camera()};
  const std::size_t n_obj = config.objects.size();
  GroundTruth truth;
  Rng rng(derive_seed(seed, {0x7275}));
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(config.truth_velocity_noise);

  std::vector<Vector3> x(n_obj), v(n_obj);
  for (std::size_t o = 0; o < n_obj; ++o) {
    x[o] = config.objects[o].position;
    v[o] = config.objects[o].velocity;
  }
  for (int t = 0; t < config.n_steps; ++t) {
    if (t > 0) {
      for (std::size_t o = 0; o < n_obj; ++o) {
        x[o] = sd > 0.0 ? Vector3(x[o] + v[o] * config.dt)
                        : Vector3(config.objects[o].position + config.objects[o].velocity * (t * config.dt));
        if (sd > 0.0)
          for (int a = 0; a < 3; ++a) v[o](a) += sd * normal(rng);
      }
    }
    truth.positions.push_back(x);
    truth.velocities.push_back(v);
    std::array<std::vector<Vector2>, 2> proj;
    std::array<std::vector<char>, 2> vis, behind;
    for (int c = 0; c < 2; ++c) {
      proj[c].assign(n_obj, Vector2::Zero());
      vis[c].assign(n_obj, 0);
      behind[c].assign(n_obj, 0);
      for (std::size_t o = 0; o < n_obj; ++o) {
        const ProjectiveCamera& cam = cams[static_cast<std::size_t>(c)];
        if (!(cam.depth(x[o]) > kHomogeneousEpsilon)) {
          behind[c][o] = 1;
          continue;
        }
        proj[c][o] = project(cam, x[o]);
        vis[c][o] = cam.in_image(proj[c][o]) ? 1 : 0;
      }
    }
    truth.projections.push_back(proj);
    truth.visible.push_back(vis);
    truth.behind.push_back(behind);
  }
  return truth;
}

std::vector<Side> cameras_at(SyncMode mode, int step) {
  if (mode == SyncMode::Synchronous) return {Side::Left, Side::Right};
  return {step % 2 == 0 ? Side::Left : Side::Right};
}

std::vector<Scan> generate_observations(const GroundTruth& truth, const ScenarioConfig& config,
                                        std::uint64_t seed) {
  const Matrix2 r = config.noise_covariance();
  const Vector2 sd = config.noise_variance.cwiseSqrt();
  std::vector<Scan> scans;
  for (int t = 0; t < truth.steps(); ++t) {
    for (Side side : cameras_at(config.sync, t)) {
      const int c = index_of(side);
      const CameraIntrinsics& intr = side == Side::Left ? config.left_intrinsics : config.right_intrinsics;
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(c)}));
      std::normal_distribution<double> normal;
      std::uniform_real_distribution<double> uniform;
      std::bernoulli_distribution detect(config.p_detection);
      std::poisson_distribution<int> clutter_count(config.clutter_lambda > 0.0 ? config.clutter_lambda : 1.0);

      Scan scan{t, side, {}};
      const auto& proj = truth.projections[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
      const auto& vis = truth.visible[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
      for (std::size_t o = 0; o < proj.size(); ++o) {
        if (!vis[o]) continue;
        if (!detect(rng)) continue;
        const Vector2 z = proj[o] + Vector2(sd.x() * normal(rng), sd.y() * normal(rng));
        scan.observations.push_back({z, r, side, t});
      }
      const int n_clutter = config.clutter_lambda > 0.0 ? clutter_count(rng) : 0;
      for (int k = 0; k < n_clutter; ++k) {
        const Vector2 z(uniform(rng) * intr.width, uniform(rng) * intr.height);
        scan.observations.push_back({z, r, side, t});
      }
      std::shuffle(scan.observations.begin(), scan.observations.end(), rng);
      std::erase_if(scan.observations, [&](const Observation& o) {
        return !(o.z.x() >= 0.0 && o.z.x() < intr.width && o.z.y() >= 0.0 && o.z.y() < intr.height);
      });
      scans.push_back(std::move(scan));
    }
  }
  return scans;
}

SeriesSummary summarise_series(const std::vector<std::vector<double>>& series) {
  SeriesSummary out;
  std::size_t len = 0;
  for (const auto& s : series) len = std::max(len, s.size());
  out.mean.assign(len, 0.0);
  out.sd.assign(len, 0.0);
  out.count.assign(len, 0);
  for (const auto& s : series)
    for (std::size_t t = 0; t < s.size(); ++t) {
      out.mean[t] += s[t];
      ++out.count[t];
    }
  for (std::size_t t = 0; t < len; ++t)
    if (out.count[t] > 0) out.mean[t] /= out.count[t];
  for (const auto& s : series)
    for (std::size_t t = 0; t < s.size(); ++t) out.sd[t] += (s[t] - out.mean[t]) * (s[t] - out.mean[t]);
  for (std::size_t t = 0; t < len; ++t)
    out.sd[t] = out.count[t] > 1 ? std::sqrt(out.sd[t] / (out.count[t] - 1)) : 0.0;
  return out;
}

}  // namespace dspace
