#ifndef DSPACE_SIM_HPP_
#define DSPACE_SIM_HPP_

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dspace/parallel.hpp"
#include "dspace/single_object.hpp"

namespace dspace {

struct ObjectSpec {
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();  ///< cm/s
};

enum class SyncMode { Synchronous, Alternating };

/// Cameras, objects and sensing conditions of one simulated experiment.
struct ScenarioConfig {
  CameraIntrinsics left_intrinsics;
  CameraIntrinsics right_intrinsics;
  CameraPose left_pose;
  CameraPose right_pose;
  std::vector<ObjectSpec> objects;
  int n_steps = 20;
  double dt = 1.0;
  Vector2 noise_variance = Vector2::Constant(2.0);  ///< (sigma_u^2, sigma_v^2) px^2
  double p_detection = 1.0;
  double clutter_lambda = 0.0;
  SyncMode sync = SyncMode::Synchronous;
  double truth_velocity_noise = 0.0;  ///< per-step velocity variance (cm/s)^2; 0 = exact CV

  void validate() const;
  ProjectiveCamera left_camera() const { return build_camera(left_intrinsics, left_pose); }
  ProjectiveCamera right_camera() const { return build_camera(right_intrinsics, right_pose); }
  ProjectiveCamera camera(Side side) const { return side == Side::Left ? left_camera() : right_camera(); }
  Matrix2 noise_covariance() const { return noise_variance.asDiagonal(); }
};

struct GroundTruth {
  std::vector<std::vector<Vector3>> positions;   ///< [step][object]
  std::vector<std::vector<Vector3>> velocities;  ///< [step][object]
  /// [step][camera][object]; projection only meaningful when visible.
  std::vector<std::array<std::vector<Vector2>, 2>> projections;
  std::vector<std::array<std::vector<char>, 2>> visible;
  std::vector<std::array<std::vector<char>, 2>> behind;  ///< flagged, not an error

  int steps() const { return static_cast<int>(positions.size()); }
};

/// Exact constant-velocity integration, plus a per-step Gaussian velocity
/// perturbation when truth_velocity_noise > 0 (seeded by `seed`).
GroundTruth generate_truth(const ScenarioConfig& config, std::uint64_t seed = 0);

/// Which cameras report at a step.
std::vector<Side> cameras_at(SyncMode mode, int step);

/// Detections (p_D, Gaussian noise), Poisson clutter uniform on the image,
/// shuffled and clipped to the image. One scan per reporting camera per step.
std::vector<Scan> generate_observations(const GroundTruth& truth, const ScenarioConfig& config,
                                        std::uint64_t seed);

template <typename T>
struct MonteCarloResult {
  std::vector<std::optional<T>> runs;
  std::vector<std::string> failures;  ///< "run i: message"
  double seconds = 0.0;

  int succeeded() const {
    int n = 0;
    for (const auto& r : runs) n += r.has_value() ? 1 : 0;
    return n;
  }
};

inline std::uint64_t run_seed(std::uint64_t base_seed, int run) {
  return derive_seed(base_seed, {0x4d43, static_cast<std::uint64_t>(run)});
}

/// Independent runs fn(run_index, run_seed); failing runs are recorded and
/// excluded.
template <typename Fn>
auto monte_carlo(int n_runs, std::uint64_t base_seed, Fn&& fn, int threads = thread_count())
    -> MonteCarloResult<decltype(fn(0, std::uint64_t{}))> {
  using T = decltype(fn(0, std::uint64_t{}));
  MonteCarloResult<T> out;
  out.runs.resize(static_cast<std::size_t>(std::max(n_runs, 0)));
  std::vector<std::string> errors(out.runs.size());
  const auto start = std::chrono::steady_clock::now();
  parallel_for(
      out.runs.size(),
      [&](std::size_t r) {
        try {
          out.runs[r] = fn(static_cast<int>(r), run_seed(base_seed, static_cast<int>(r)));
        } catch (const Error& e) {
          errors[r] = e.what();
        }
      },
      threads);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (std::size_t r = 0; r < errors.size(); ++r)
    if (!out.runs[r]) out.failures.push_back("run " + std::to_string(r) + ": " + errors[r]);
  return out;
}

struct SeriesSummary {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<int> count;
};

/// Per-step mean/sd over runs; series may differ in length.
SeriesSummary summarise_series(const std::vector<std::vector<double>>& series);

}  // namespace dspace

#endif  // DSPACE_SIM_HPP_
