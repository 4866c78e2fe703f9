#include "dspace/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

#ifndef DSPACE_PRESET_DIR
#define DSPACE_PRESET_DIR "presets"
#endif

namespace dspace {

std::string to_string(Command c) {
  switch (c) {
    case Command::Localise: return "localise";
    case Command::Track: return "track";
    case Command::Phd: return "phd";
    case Command::Calibrate: return "calibrate";
  }
  return "?";
}

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::None: return "none";
    case BaselineKind::ParticleFilter: return "pf";
    case BaselineKind::InverseDepth: return "idekf";
  }
  return "?";
}

BaselineKind parse_baseline_kind(const std::string& s) {
  if (s == "none") return BaselineKind::None;
  if (s == "pf") return BaselineKind::ParticleFilter;
  if (s == "idekf") return BaselineKind::InverseDepth;
  throw Error(ErrorCode::ConfigError, "unknown baseline '" + s + "' (expected pf, idekf or none)");
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

/// Cursor over a JSON value that remembers its path and which keys were read.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  bool is_null() const { return j_.is_null(); }

  template <typename F>
  void field(const std::string& key, F&& f) {
    if (!j_.is_object()) fail(path_, "expected an object");
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    Node child(*it, path_ + "." + key);
    f(child);
  }

  void finish() const {
    if (!j_.is_object()) fail(path_, "expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(path_ + "." + it.key(), "unknown field");
  }

  double number() const {
    if (!j_.is_number()) fail(path_, "expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail(path_, "expected a finite number");
    return v;
  }

  /// Radians: a number, or a string "[-][k*]pi[/n]".
  double angle() const {
    if (j_.is_number()) return number();
    if (!j_.is_string()) fail(path_, "expected an angle (number or \"pi/n\")");
    static const std::regex re(R"(\s*(-)?\s*(?:(\d+(?:\.\d+)?)\s*\*\s*)?pi\s*(?:/\s*(\d+(?:\.\d+)?))?\s*)");
    std::smatch m;
    const std::string s = j_.get<std::string>();
    if (!std::regex_match(s, m, re)) fail(path_, "cannot read angle '" + s + "'");
    double v = std::numbers::pi;
    if (m[2].matched) v *= std::stod(m[2].str());
    if (m[3].matched) v /= std::stod(m[3].str());
    return m[1].matched ? -v : v;
  }

  int integer() const {
    if (!j_.is_number_integer()) fail(path_, "expected an integer");
    return j_.get<int>();
  }

  std::uint64_t unsigned_integer() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long long>() >= 0))
      fail(path_, "expected a non-negative integer");
    return j_.get<std::uint64_t>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail(path_, "expected true or false");
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) fail(path_, "expected a string");
    return j_.get<std::string>();
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector() const {
    if (!j_.is_array() || j_.size() != static_cast<std::size_t>(N))
      fail(path_, "expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v(i) = Node(j_[static_cast<std::size_t>(i)], path_ + "[" + std::to_string(i) + "]").number();
    return v;
  }

  std::vector<Node> array() const {
    if (!j_.is_array()) fail(path_, "expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_.size(); ++i) out.emplace_back(j_[i], path_ + "[" + std::to_string(i) + "]");
    return out;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <int N>
Json array_of(const Eigen::Matrix<double, N, 1>& v) {
  Json a = Json::array();
  for (int i = 0; i < N; ++i) a.push_back(v(i));
  return a;
}

void read_intrinsics(Node& n, CameraIntrinsics& c) {
  n.field("focal_length_mm", [&](Node& x) { c.focal_length_mm = x.number(); });
  n.field("pixel_size_u_um", [&](Node& x) { c.pixel_size_u_um = x.number(); });
  n.field("pixel_size_v_um", [&](Node& x) { c.pixel_size_v_um = x.number(); });
  n.field("principal_u", [&](Node& x) { c.principal_u = x.number(); });
  n.field("principal_v", [&](Node& x) { c.principal_v = x.number(); });
  n.field("width", [&](Node& x) { c.width = x.integer(); });
  n.field("height", [&](Node& x) { c.height = x.integer(); });
  n.finish();
}

Json write_intrinsics(const CameraIntrinsics& c) {
  return Json{{"focal_length_mm", c.focal_length_mm}, {"pixel_size_u_um", c.pixel_size_u_um},
              {"pixel_size_v_um", c.pixel_size_v_um}, {"principal_u", c.principal_u},
              {"principal_v", c.principal_v},         {"width", c.width},
              {"height", c.height}};
}

void read_pose(Node& n, CameraPose& p) {
  n.field("position", [&](Node& x) { p.position = x.vector<3>(); });
  n.field("yaw", [&](Node& x) { p.yaw = x.angle(); });
  n.field("pitch", [&](Node& x) { p.pitch = x.angle(); });
  n.field("roll", [&](Node& x) { p.roll = x.angle(); });
  n.finish();
}

Json write_pose(const CameraPose& p) {
  return Json{{"position", array_of<3>(p.position)}, {"yaw", p.yaw}, {"pitch", p.pitch}, {"roll", p.roll}};
}

void read_camera(Node& n, CameraIntrinsics& intr, CameraPose& pose) {
  n.field("intrinsics", [&](Node& x) { read_intrinsics(x, intr); });
  n.field("pose", [&](Node& x) { read_pose(x, pose); });
  n.finish();
}

void read_disparity_prior(Node& n, DisparityPrior& p) {
  n.field("mean", [&](Node& x) { p.mean = x.number(); });
  n.field("variance", [&](Node& x) { p.variance = x.number(); });
  n.finish();
}

Json write_disparity_prior(const DisparityPrior& p) { return Json{{"mean", p.mean}, {"variance", p.variance}}; }

void read_velocity_prior(Node& n, VelocityPrior& p) {
  n.field("mean", [&](Node& x) { p.mean = x.vector<3>(); });
  n.field("variance", [&](Node& x) { p.variance = x.vector<3>(); });
  n.finish();
}

Json write_velocity_prior(const VelocityPrior& p) {
  return Json{{"mean", array_of<3>(p.mean)}, {"variance", array_of<3>(p.variance)}};
}

void read_scenario(Node& n, ScenarioConfig& s) {
  n.field("left", [&](Node& x) { read_camera(x, s.left_intrinsics, s.left_pose); });
  n.field("right", [&](Node& x) { read_camera(x, s.right_intrinsics, s.right_pose); });
  n.field("objects", [&](Node& x) {
    s.objects.clear();
    for (Node& o : x.array()) {
      ObjectSpec spec;
      o.field("position", [&](Node& y) { spec.position = y.vector<3>(); });
      o.field("velocity", [&](Node& y) { spec.velocity = y.vector<3>(); });
      o.finish();
      s.objects.push_back(spec);
    }
  });
  n.field("n_steps", [&](Node& x) { s.n_steps = x.integer(); });
  n.field("dt", [&](Node& x) { s.dt = x.number(); });
  n.field("noise_variance", [&](Node& x) { s.noise_variance = x.vector<2>(); });
  n.field("p_detection", [&](Node& x) { s.p_detection = x.number(); });
  n.field("clutter_lambda", [&](Node& x) { s.clutter_lambda = x.number(); });
  n.field("sync", [&](Node& x) {
    const std::string v = x.string();
    if (v == "synchronous") s.sync = SyncMode::Synchronous;
    else if (v == "alternating") s.sync = SyncMode::Alternating;
    else fail(x.path(), "expected \"synchronous\" or \"alternating\"");
  });
  n.field("truth_velocity_noise", [&](Node& x) { s.truth_velocity_noise = x.number(); });
  n.finish();
}

Json write_scenario(const ScenarioConfig& s) {
  Json objects = Json::array();
  for (const auto& o : s.objects)
    objects.push_back(Json{{"position", array_of<3>(o.position)}, {"velocity", array_of<3>(o.velocity)}});
  return Json{
      {"left", Json{{"intrinsics", write_intrinsics(s.left_intrinsics)}, {"pose", write_pose(s.left_pose)}}},
      {"right", Json{{"intrinsics", write_intrinsics(s.right_intrinsics)}, {"pose", write_pose(s.right_pose)}}},
      {"objects", objects},
      {"n_steps", s.n_steps},
      {"dt", s.dt},
      {"noise_variance", array_of<2>(s.noise_variance)},
      {"p_detection", s.p_detection},
      {"clutter_lambda", s.clutter_lambda},
      {"sync", s.sync == SyncMode::Synchronous ? "synchronous" : "alternating"},
      {"truth_velocity_noise", s.truth_velocity_noise}};
}

void read_filter(Node& n, FilterConfig& f) {
  n.field("disparity_prior", [&](Node& x) { read_disparity_prior(x, f.disparity_prior); });
  n.field("velocity_prior", [&](Node& x) {
    if (x.is_null()) {
      f.velocity_prior.reset();
      return;
    }
    VelocityPrior v;
    read_velocity_prior(x, v);
    f.velocity_prior = v;
  });
  n.field("motion", [&](Node& x) {
    x.field("kind", [&](Node& y) {
      const std::string k = y.string();
      if (k == "static") f.motion.kind = MotionKind::Static;
      else if (k == "constant_velocity") f.motion.kind = MotionKind::ConstantVelocity;
      else fail(y.path(), "expected \"static\" or \"constant_velocity\"");
    });
    x.field("process_noise_variance", [&](Node& y) { f.motion.process_noise_variance = y.number(); });
    x.finish();
  });
  n.field("move_particles", [&](Node& x) { f.move_particles = x.integer(); });
  n.field("prediction_particles", [&](Node& x) { f.prediction_particles = x.integer(); });
  n.field("fov_truncation", [&](Node& x) { f.fov_truncation = x.boolean(); });
  n.field("abstract_baseline", [&](Node& x) { f.abstract_baseline = x.number(); });
  n.finish();
}

Json write_filter(const FilterConfig& f) {
  return Json{{"disparity_prior", write_disparity_prior(f.disparity_prior)},
              {"velocity_prior", f.velocity_prior ? write_velocity_prior(*f.velocity_prior) : Json()},
              {"motion", Json{{"kind", f.motion.kind == MotionKind::Static ? "static" : "constant_velocity"},
                              {"process_noise_variance", f.motion.process_noise_variance}}},
              {"move_particles", f.move_particles},
              {"prediction_particles", f.prediction_particles},
              {"fov_truncation", f.fov_truncation},
              {"abstract_baseline", f.abstract_baseline}};
}

void read_phd(Node& n, PhdConfig& p) {
  n.field("p_survival", [&](Node& x) { p.p_survival = x.number(); });
  n.field("birth_weight", [&](Node& x) { p.birth_weight = x.number(); });
  n.field("p_detection", [&](Node& x) { p.p_detection = x.number(); });
  n.field("clutter_lambda", [&](Node& x) { p.clutter_lambda = x.number(); });
  n.field("prune_threshold", [&](Node& x) { p.prune_threshold = x.number(); });
  n.field("merge_distance", [&](Node& x) { p.merge_distance = x.number(); });
  n.field("max_components", [&](Node& x) { p.max_components = x.integer(); });
  n.field("extraction_threshold", [&](Node& x) { p.extraction_threshold = x.number(); });
  n.field("move_particles", [&](Node& x) { p.move_particles = x.integer(); });
  n.field("split_particles", [&](Node& x) { p.split_particles = x.integer(); });
  n.field("fast_path_fraction", [&](Node& x) { p.fast_path_fraction = x.number(); });
  n.field("disparity_prior", [&](Node& x) { read_disparity_prior(x, p.disparity_prior); });
  n.field("velocity_prior", [&](Node& x) { read_velocity_prior(x, p.velocity_prior); });
  n.field("process_noise_variance", [&](Node& x) { p.process_noise_variance = x.number(); });
  n.finish();
}

Json write_phd(const PhdConfig& p) {
  return Json{{"p_survival", p.p_survival},
              {"birth_weight", p.birth_weight},
              {"p_detection", p.p_detection},
              {"clutter_lambda", p.clutter_lambda},
              {"prune_threshold", p.prune_threshold},
              {"merge_distance", p.merge_distance},
              {"max_components", p.max_components},
              {"extraction_threshold", p.extraction_threshold},
              {"move_particles", p.move_particles},
              {"split_particles", p.split_particles},
              {"fast_path_fraction", p.fast_path_fraction},
              {"disparity_prior", write_disparity_prior(p.disparity_prior)},
              {"velocity_prior", write_velocity_prior(p.velocity_prior)},
              {"process_noise_variance", p.process_noise_variance}};
}

void read_calibration(Node& n, CalibrationConfig& c) {
  n.field("particles", [&](Node& x) { c.particles = x.integer(); });
  n.field("sd", [&](Node& x) {
    const auto items = x.array();
    if (items.size() != 6) fail(x.path(), "expected 6 entries (x, y, z, yaw, pitch, roll)");
    for (int i = 0; i < 6; ++i) c.sd(i) = i < 3 ? items[static_cast<std::size_t>(i)].number()
                                                : items[static_cast<std::size_t>(i)].angle();
  });
  n.field("prior_mean", [&](Node& x) {
    c.prior_mean = x.string();
    if (c.prior_mean != "sampled" && c.prior_mean != "truth") fail(x.path(), "expected \"sampled\" or \"truth\"");
  });
  n.field("ess_threshold", [&](Node& x) { c.ess_threshold = x.number(); });
  n.field("jitter_sd", [&](Node& x) { c.jitter_sd = x.vector<6>(); });
  n.field("kernel_bandwidth", [&](Node& x) { c.kernel_bandwidth = x.number(); });
  n.field("reweight_left", [&](Node& x) { c.reweight_left = x.boolean(); });
  n.field("max_components", [&](Node& x) { c.max_components = x.integer(); });
  n.field("move_particles", [&](Node& x) { c.move_particles = x.integer(); });
  n.field("split_particles", [&](Node& x) { c.split_particles = x.integer(); });
  n.finish();
}

Json write_calibration(const CalibrationConfig& c) {
  return Json{{"particles", c.particles},         {"sd", array_of<6>(c.sd)},
              {"prior_mean", c.prior_mean},       {"ess_threshold", c.ess_threshold},
              {"jitter_sd", array_of<6>(c.jitter_sd)}, {"kernel_bandwidth", c.kernel_bandwidth},
              {"reweight_left", c.reweight_left},
              {"max_components", c.max_components},   {"move_particles", c.move_particles},
              {"split_particles", c.split_particles}};
}

Command parse_command(const Node& n) {
  const std::string s = n.string();
  if (s == "localise") return Command::Localise;
  if (s == "track") return Command::Track;
  if (s == "phd") return Command::Phd;
  if (s == "calibrate") return Command::Calibrate;
  fail(n.path(), "expected localise, track, phd or calibrate");
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    scenario.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("$.scenario: ") + e.what());
  }
  if (runs < 1) fail("$.runs", "must be >= 1");
  if (!(filter.disparity_prior.variance > 0.0)) fail("$.filter.disparity_prior.variance", "must be > 0");
  if (filter.velocity_prior && !(filter.velocity_prior->variance.array() > 0.0).all())
    fail("$.filter.velocity_prior.variance", "must be > 0");
  if (filter.motion.process_noise_variance < 0.0) fail("$.filter.motion.process_noise_variance", "must be >= 0");
  if (filter.motion.kind == MotionKind::ConstantVelocity && !filter.velocity_prior)
    fail("$.filter.velocity_prior", "required by a constant-velocity model");
  if (filter.move_particles < 2) fail("$.filter.move_particles", "must be >= 2");
  if (filter.prediction_particles < 2) fail("$.filter.prediction_particles", "must be >= 2");
  if (filter.abstract_baseline == 0.0) fail("$.filter.abstract_baseline", "must be nonzero");
  if (baseline.particles < 2) fail("$.baseline.particles", "must be >= 2");
  if (!(baseline.resample_threshold > 0.0 && baseline.resample_threshold <= 1.0))
    fail("$.baseline.resample_threshold", "must lie in (0, 1]");
  if (localise.distances.empty() || localise.priors.empty()) fail("$.localise", "grid must not be empty");
  for (double d : localise.distances)
    if (!(d > 0.0)) fail("$.localise.distances", "distances must be > 0");
  for (const auto& p : localise.priors)
    if (!(p.variance > 0.0)) fail("$.localise.priors", "variances must be > 0");
  if (!(phd.p_survival >= 0.0 && phd.p_survival <= 1.0)) fail("$.phd.p_survival", "must lie in [0, 1]");
  if (!(phd.p_detection >= 0.0 && phd.p_detection <= 1.0)) fail("$.phd.p_detection", "must lie in [0, 1]");
  if (!(phd.birth_weight >= 0.0)) fail("$.phd.birth_weight", "must be >= 0");
  if (!(phd.clutter_lambda >= 0.0)) fail("$.phd.clutter_lambda", "must be >= 0");
  if (!(phd.prune_threshold > 0.0)) fail("$.phd.prune_threshold", "must be > 0");
  if (!(phd.merge_distance > 0.0)) fail("$.phd.merge_distance", "must be > 0");
  if (phd.max_components < 1) fail("$.phd.max_components", "must be >= 1");
  if (phd.move_particles < 2 || phd.split_particles < 2) fail("$.phd", "particle counts must be >= 2");
  if (!(phd.velocity_prior.variance.array() > 0.0).all()) fail("$.phd.velocity_prior.variance", "must be > 0");
  if (!(phd.process_noise_variance >= 0.0)) fail("$.phd.process_noise_variance", "must be >= 0");
  try {
    ospa.validate();
  } catch (const Error& e) {
    fail("$.ospa", e.what());
  }
  if (calibration.particles < 1) fail("$.calibration.particles", "must be >= 1");
  if (!(calibration.sd.array() >= 0.0).all()) fail("$.calibration.sd", "must be >= 0");
  if (!(calibration.ess_threshold > 0.0 && calibration.ess_threshold <= 1.0))
    fail("$.calibration.ess_threshold", "must lie in (0, 1]");
  if (!(calibration.jitter_sd.array() >= 0.0).all()) fail("$.calibration.jitter_sd", "must be >= 0");
  if (!(calibration.kernel_bandwidth >= 0.0 && calibration.kernel_bandwidth < 1.0))
    fail("$.calibration.kernel_bandwidth", "must lie in [0, 1)");
  if (calibration.max_components < 1) fail("$.calibration.max_components", "must be >= 1");
  if (calibration.move_particles < 2 || calibration.split_particles < 2)
    fail("$.calibration", "particle counts must be >= 2");
  if (command != Command::Localise && scenario.objects.empty()) fail("$.scenario.objects", "must not be empty");
}

SingleObjectParams ExperimentConfig::single_object_params() const {
  SingleObjectParams p;
  p.disparity_prior = filter.disparity_prior;
  p.velocity_prior = filter.velocity_prior;
  p.motion = filter.motion;
  p.motion.dt = scenario.dt;
  p.move_particles = filter.move_particles;
  p.prediction_particles = filter.prediction_particles;
  p.fov_truncation = filter.fov_truncation;
  return p;
}

PhdModels ExperimentConfig::phd_models() const {
  PhdModels m;
  m.p_survival = phd.p_survival;
  m.motion = MotionModel::constant_velocity(phd.process_noise_variance, scenario.dt);
  m.disparity_prior = phd.disparity_prior;
  m.velocity_prior = phd.velocity_prior;
  m.birth_weight = phd.birth_weight;
  m.clutter.lambda = phd.clutter_lambda;
  m.clutter.width = scenario.left_intrinsics.width;
  m.clutter.height = scenario.left_intrinsics.height;
  m.detection.p_inside = phd.p_detection;
  m.detection.width = scenario.left_intrinsics.width;
  m.detection.height = scenario.left_intrinsics.height;
  m.observation_covariance = scenario.noise_covariance();
  m.prune_threshold = phd.prune_threshold;
  m.merge_distance = phd.merge_distance;
  m.max_components = phd.max_components;
  m.extraction_threshold = phd.extraction_threshold;
  m.move_particles = phd.move_particles;
  m.split_particles = phd.split_particles;
  m.fast_path_fraction = phd.fast_path_fraction;
  return m;
}

CalibrationModels ExperimentConfig::calibration_models() const {
  CalibrationModels m;
  m.phd = phd_models();
  m.phd.max_components = calibration.max_components;
  m.phd.move_particles = calibration.move_particles;
  m.phd.split_particles = calibration.split_particles;
  m.ess_threshold = calibration.ess_threshold;
  m.jitter_sd = calibration.jitter_sd;
  m.kernel_bandwidth = calibration.kernel_bandwidth;
  m.reweight_left = calibration.reweight_left;
  return m;
}

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  Node root(j, "$");
  root.field("name", [&](Node& x) { c.name = x.string(); });
  root.field("command", [&](Node& x) { c.command = parse_command(x); });
  root.field("seed", [&](Node& x) { c.seed = x.unsigned_integer(); });
  root.field("runs", [&](Node& x) { c.runs = x.integer(); });
  root.field("scenario", [&](Node& x) { read_scenario(x, c.scenario); });
  root.field("filter", [&](Node& x) { read_filter(x, c.filter); });
  root.field("baseline", [&](Node& x) {
    x.field("kind", [&](Node& y) {
      try {
        c.baseline.kind = parse_baseline_kind(y.string());
      } catch (const Error& e) {
        fail(y.path(), e.what());
      }
    });
    x.field("particles", [&](Node& y) { c.baseline.particles = y.integer(); });
    x.field("resample_threshold", [&](Node& y) { c.baseline.resample_threshold = y.number(); });
    x.finish();
  });
  root.field("localise", [&](Node& x) {
    x.field("distances", [&](Node& y) {
      c.localise.distances.clear();
      for (const Node& d : y.array()) c.localise.distances.push_back(d.number());
    });
    x.field("priors", [&](Node& y) {
      c.localise.priors.clear();
      for (Node& p : y.array()) {
        DisparityPrior prior;
        read_disparity_prior(p, prior);
        c.localise.priors.push_back(prior);
      }
    });
    x.finish();
  });
  root.field("phd", [&](Node& x) { read_phd(x, c.phd); });
  root.field("ospa", [&](Node& x) {
    x.field("cutoff", [&](Node& y) { c.ospa.cutoff = y.number(); });
    x.field("order", [&](Node& y) { c.ospa.order = y.number(); });
    x.finish();
  });
  root.field("calibration", [&](Node& x) { read_calibration(x, c.calibration); });
  root.finish();
  c.validate();
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json priors = Json::array();
  for (const auto& p : c.localise.priors) priors.push_back(write_disparity_prior(p));
  return Json{{"name", c.name},
              {"command", to_string(c.command)},
              {"seed", c.seed},
              {"runs", c.runs},
              {"scenario", write_scenario(c.scenario)},
              {"filter", write_filter(c.filter)},
              {"baseline", Json{{"kind", to_string(c.baseline.kind)},
                                {"particles", c.baseline.particles},
                                {"resample_threshold", c.baseline.resample_threshold}}},
              {"localise", Json{{"distances", c.localise.distances}, {"priors", priors}}},
              {"phd", write_phd(c.phd)},
              {"ospa", Json{{"cutoff", c.ospa.cutoff}, {"order", c.ospa.order}}},
              {"calibration", write_calibration(c.calibration)}};
}

ExperimentConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Translate the byte offset into line and column.
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(at), '\n'));
    const std::size_t nl = text.rfind('\n', at == 0 ? 0 : at - 1);
    const std::size_t col = nl == std::string::npos ? at + 1 : at - nl;
    throw Error(ErrorCode::ConfigError, "JSON syntax error at line " + std::to_string(line) + ", column " +
                                            std::to_string(col) + ": " + e.what());
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

std::filesystem::path preset_directory() {
  if (const char* env = std::getenv("DSPACE_PRESETS")) return env;
  return DSPACE_PRESET_DIR;
}

std::vector<std::string> list_presets() {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(preset_directory(), ec))
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

ExperimentConfig load_preset(const std::string& name) {
  const auto names = list_presets();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string msg = "unknown preset '" + name + "'; available:";
    for (const auto& n : names) msg += " " + n;
    throw Error(ErrorCode::ConfigError, msg);
  }
  return load_config(preset_directory() / (name + ".json"));
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string canonical = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dspace
