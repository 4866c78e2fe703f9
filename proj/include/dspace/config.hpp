#ifndef DSPACE_CONFIG_HPP_
#define DSPACE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dspace/calibration.hpp"
#include "dspace/metrics.hpp"
#include "dspace/sim.hpp"
#include "json.hpp"

namespace dspace {

using Json = nlohmann::ordered_json;

enum class Command { Localise, Track, Phd, Calibrate };
std::string to_string(Command c);

enum class BaselineKind { None, ParticleFilter, InverseDepth };
std::string to_string(BaselineKind k);
BaselineKind parse_baseline_kind(const std::string& s);

struct FilterConfig {
  DisparityPrior disparity_prior;
  std::optional<VelocityPrior> velocity_prior;
  MotionModel motion = MotionModel::stationary();
  int move_particles = 250;
  int prediction_particles = 500;
  bool fov_truncation = true;
  double abstract_baseline = kDefaultAbstractBaseline;
};

struct BaselineConfig {
  BaselineKind kind = BaselineKind::None;
  int particles = 100;
  double resample_threshold = 0.5;
};

/// Grid of (object depth on the optical axis, disparity prior) cells.
struct LocaliseConfig {
  std::vector<double> distances{50.0, 100.0, 150.0};
  std::vector<DisparityPrior> priors{{6.0, 4.0}, {7.0, 5.4}, {8.0, 7.1}};
};

struct PhdConfig {
  double p_survival = 0.99;
  double birth_weight = 0.1;
  double p_detection = 0.95;  ///< filter model; the scenario's p_detection drives the data
  double clutter_lambda = 10.0;
  double prune_threshold = 1e-6;
  double merge_distance = 7.0;
  int max_components = 200;
  double extraction_threshold = 0.5;
  int move_particles = 250;
  int split_particles = 250;
  double fast_path_fraction = 0.999;
  DisparityPrior disparity_prior;
  VelocityPrior velocity_prior;
  double process_noise_variance = 0.08;
};

struct CalibrationConfig {
  int particles = 1500;
  Vector6 sd = (Vector6() << 5.0, 5.0, 5.0, 0.1308996938995747, 0.017453292519943295, 0.017453292519943295)
                   .finished();
  /// "sampled": per-run prior mean drawn from N(truth, sd); "truth": centred on truth.
  std::string prior_mean = "sampled";
  double ess_threshold = 0.5;
  Vector6 jitter_sd = Vector6::Zero();
  double kernel_bandwidth = 0.0;
  bool reweight_left = true;
  int max_components = 50;
  int move_particles = 100;
  int split_particles = 100;
};

struct ExperimentConfig {
  std::string name;
  Command command = Command::Localise;
  std::uint64_t seed = 1;
  int runs = 1;
  ScenarioConfig scenario;
  FilterConfig filter;
  BaselineConfig baseline;
  LocaliseConfig localise;
  PhdConfig phd;
  OspaParams ospa;
  CalibrationConfig calibration;

  void validate() const;
  SingleObjectParams single_object_params() const;
  PhdModels phd_models() const;
  CalibrationModels calibration_models() const;
};

/// Strict parse: unknown keys and type mismatches are ConfigError with the
/// JSON path of the offending field. Missing keys take defaults.
ExperimentConfig parse_config(const Json& j);
Json to_json(const ExperimentConfig& c);

/// Parses text; syntax errors report line and column.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::filesystem::path preset_directory();
std::vector<std::string> list_presets();
/// Throws ConfigError listing the available presets if `name` is unknown.
ExperimentConfig load_preset(const std::string& name);

/// Stable digest of the canonical serialisation (FNV-1a, 64-bit, hex).
std::string config_hash(const ExperimentConfig& c);

}  // namespace dspace

#endif  // DSPACE_CONFIG_HPP_
