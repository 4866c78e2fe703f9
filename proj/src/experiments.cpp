#include "dspace/experiments.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "dspace/csv.hpp"

namespace dspace {

std::uint64_t stream_seed(std::uint64_t run_seed, Stream s, std::uint64_t sub) {
  return derive_seed(run_seed, {static_cast<std::uint64_t>(s), sub});
}

double ErrorSeries::rmse() const {
  if (errors.empty()) throw Error(ErrorCode::InvalidInput, "RMSE of an empty series");
  double s = 0.0;
  for (double e : errors) s += e * e;
  return std::sqrt(s / static_cast<double>(errors.size()));
}

double trend_slope(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = static_cast<double>(i);
    sx += x;
    sy += values[i];
    sxx += x * x;
    sxy += x * values[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

/// Last valid estimate at or before each truth step; steps before the first
/// estimate are skipped.
template <typename Steps, typename Valid>
ErrorSeries align(const Steps& steps, const GroundTruth& truth, Valid valid) {
  std::map<int, Vector3> at;
  for (const auto& s : steps)
    if (valid(s)) at[s.time] = s.estimate;
  ErrorSeries out;
  std::optional<Vector3> current;
  for (int t = 0; t < truth.steps(); ++t) {
    if (auto it = at.find(t); it != at.end()) current = it->second;
    if (!current) continue;
    out.times.push_back(t);
    out.estimates.push_back(*current);
    out.errors.push_back((*current - truth.positions[static_cast<std::size_t>(t)][0]).norm());
  }
  return out;
}

/// Per-step error lists of equal length across runs (runs aligned on time).
SeriesSummary summarise_errors(const std::vector<ErrorSeries>& runs) {
  std::vector<std::vector<double>> series;
  for (const auto& r : runs) series.push_back(r.errors);
  return summarise_series(series);
}

double series_rms(const std::vector<ErrorSeries>& runs, std::size_t t) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : runs)
    if (t < r.errors.size()) {
      s += r.errors[t] * r.errors[t];
      ++n;
    }
  return n > 0 ? std::sqrt(s / n) : 0.0;
}

void add_truth(CsvWriter& csv, const GroundTruth& truth, int run, std::optional<int> cell) {
  for (int t = 0; t < truth.steps(); ++t) {
    const auto& xs = truth.positions[static_cast<std::size_t>(t)];
    const auto& vs = truth.velocities[static_cast<std::size_t>(t)];
    for (std::size_t o = 0; o < xs.size(); ++o) {
      csv.cell(run);
      if (cell) csv.cell(*cell);
      csv.cell(t).cell(static_cast<int>(o));
      for (int a = 0; a < 3; ++a) csv.cell(xs[o](a));
      for (int a = 0; a < 3; ++a) csv.cell(vs[o](a));
      csv.end_row();
    }
  }
}

void add_observations(CsvWriter& csv, std::span<const Scan> scans, int run, std::optional<int> cell) {
  for (const Scan& s : scans)
    for (const Observation& o : s.observations) {
      csv.cell(run);
      if (cell) csv.cell(*cell);
      csv.cell(s.time).cell(to_string(s.camera)).cell(o.z.x()).cell(o.z.y());
      csv.end_row();
    }
}

std::vector<std::string> with_cell(std::vector<std::string> h, bool cell) {
  if (cell) h.insert(h.begin() + 1, "cell");
  return h;
}

const std::vector<std::string> kTruthHeader{"run", "time", "object", "x", "y", "z", "vx", "vy", "vz"};
const std::vector<std::string> kObservationHeader{"run", "time", "camera", "u", "v"};

struct SingleRun {
  GroundTruth truth;
  std::vector<Scan> scans;
  ErrorSeries filter;
  std::optional<ErrorSeries> baseline;
  std::vector<Vector3> filter_estimates;
  std::vector<Vector3> baseline_estimates;
  bool filter_failed = false;
  bool baseline_failed = false;
  std::string failure;
  int divergences = 0;
  double filter_seconds = 0.0;
  double baseline_seconds = 0.0;
};

/// One single-object run of the disparity filter plus the configured baseline.
SingleRun single_object_run(const ExperimentConfig& config, const ScenarioConfig& scenario,
                            const SingleObjectParams& params, std::uint64_t run_seed, std::uint64_t cell) {
  SingleRun run;
  run.truth = generate_truth(scenario, stream_seed(run_seed, Stream::Truth));
  run.scans = generate_observations(run.truth, scenario, stream_seed(run_seed, Stream::Observations));
  const ObservationSet obs = flatten(run.scans);
  const CameraRig rig =
      CameraRig::non_rectified(scenario.left_camera(), scenario.right_camera(), config.filter.abstract_baseline);

  auto t0 = std::chrono::steady_clock::now();
  try {
    const SingleTrackResult r = track_single(rig, obs, params, stream_seed(run_seed, Stream::Filter, cell));
    run.filter = align(r.steps, run.truth, [](const SingleStep& s) { return s.estimate_valid; });
  } catch (const Error& e) {
    run.filter_failed = true;
    run.failure = std::string("filter: ") + e.what();
  }
  auto t1 = std::chrono::steady_clock::now();
  run.filter_seconds = std::chrono::duration<double>(t1 - t0).count();

  if (config.baseline.kind != BaselineKind::None) {
    try {
      BaselineResult b;
      if (config.baseline.kind == BaselineKind::ParticleFilter) {
        ParticleFilterParams p;
        p.n_particles = config.baseline.particles;
        p.disparity_prior = params.disparity_prior;
        p.velocity_prior = params.velocity_prior;
        p.motion = params.motion;
        p.resample_threshold = config.baseline.resample_threshold;
        b = baseline_pf(rig, obs, p, stream_seed(run_seed, Stream::Baseline, cell));
      } else {
        b = baseline_inverse_depth_ekf(rig, obs, InverseDepthParams{params.disparity_prior});
      }
      run.divergences = b.divergences;
      run.baseline = align(b.steps, run.truth, [](const BaselineStep& s) { return !s.diverged; });
    } catch (const Error& e) {
      run.baseline_failed = true;
      run.failure += std::string(run.failure.empty() ? "" : "; ") + "baseline: " + e.what();
    }
    run.baseline_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
  }
  return run;
}

void add_estimates(CsvWriter& csv, const ErrorSeries& e, int run, std::optional<int> cell, const char* filter) {
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    csv.cell(run);
    if (cell) csv.cell(*cell);
    csv.cell(e.times[k]).cell(filter);
    for (int a = 0; a < 3; ++a) csv.cell(e.estimates[k](a));
    csv.cell(e.errors[k]);
    csv.end_row();
  }
}

}  // namespace


LocaliseResult run_localise(const ExperimentConfig& config) {
  config.validate();
  LocaliseResult result;
  const bool has_baseline = config.baseline.kind != BaselineKind::None;
  const std::string baseline_name = to_string(config.baseline.kind);
  CsvWriter truth_csv(with_cell(kTruthHeader, true));
  CsvWriter obs_csv(with_cell(kObservationHeader, true));
  CsvWriter est_csv({"run", "cell", "time", "filter", "x", "y", "z", "error"});
  std::vector<std::string> mh{"cell", "distance", "prior_mean", "prior_variance", "time", "filter_rmse",
                              "filter_error_mean", "filter_error_sd"};
  if (has_baseline)
    for (const char* h : {"baseline_rmse", "baseline_error_mean", "baseline_error_sd"}) mh.emplace_back(h);
  CsvWriter metrics_csv(mh);

  int cell_index = 0;
  for (std::size_t di = 0; di < config.localise.distances.size(); ++di) {
    ScenarioConfig scenario = config.scenario;
    scenario.objects = {ObjectSpec{Vector3(0.0, 0.0, config.localise.distances[di]), Vector3::Zero()}};
    for (const DisparityPrior& prior : config.localise.priors) {
      const int cell = cell_index++;
      SingleObjectParams params = config.single_object_params();
      params.disparity_prior = prior;
      // Data depend on the run and the distance only, so every prior of a
      // row sees the same observations.
      auto mc = monte_carlo(config.runs, config.seed, [&](int, std::uint64_t seed) {
        return single_object_run(config, scenario, params, derive_seed(seed, {di}),
                                 static_cast<std::uint64_t>(cell));
      });

      LocaliseCell c;
      c.distance = config.localise.distances[di];
      c.prior = prior;
      std::vector<ErrorSeries> f_runs, b_runs;
      for (std::size_t r = 0; r < mc.runs.size(); ++r) {
        if (!mc.runs[r]) {
          ++c.filter_failures;
          continue;
        }
        const SingleRun& run = *mc.runs[r];
        const int ri = static_cast<int>(r);
        if (cell % static_cast<int>(config.localise.priors.size()) == 0) {
          add_truth(truth_csv, run.truth, ri, cell);
          add_observations(obs_csv, run.scans, ri, cell);
        }
        if (!run.failure.empty())
          result.output.failures.push_back("cell " + std::to_string(cell) + " run " + std::to_string(r) + ": " +
                                           run.failure);
        if (run.filter_failed || run.filter.errors.empty()) {
          ++c.filter_failures;
        } else {
          f_runs.push_back(run.filter);
          c.filter_rmse.push_back(run.filter.rmse());
          add_estimates(est_csv, run.filter, ri, cell, "disparity");
        }
        if (has_baseline) {
          c.baseline_divergences += run.divergences;
          if (run.baseline_failed || !run.baseline || run.baseline->errors.empty()) {
            ++c.baseline_failures;
          } else {
            b_runs.push_back(*run.baseline);
            c.baseline_rmse.push_back(run.baseline->rmse());
            add_estimates(est_csv, *run.baseline, ri, cell, baseline_name.c_str());
          }
        }
      }
      c.filter = summarise<double>(c.filter_rmse);
      c.baseline = summarise<double>(c.baseline_rmse);
      c.filter_error = summarise_errors(f_runs);
      c.baseline_error = summarise_errors(b_runs);
      for (std::size_t t = 0; t < c.filter_error.mean.size(); ++t) {
        metrics_csv.cell(cell).cell(c.distance).cell(prior.mean).cell(prior.variance).cell(static_cast<int>(t));
        metrics_csv.cell(series_rms(f_runs, t)).cell(c.filter_error.mean[t]).cell(c.filter_error.sd[t]);
        if (has_baseline) {
          const bool ok = t < c.baseline_error.mean.size();
          metrics_csv.cell(ok ? series_rms(b_runs, t) : std::nan(""))
              .cell(ok ? c.baseline_error.mean[t] : std::nan(""))
              .cell(ok ? c.baseline_error.sd[t] : std::nan(""));
        }
        metrics_csv.end_row();
      }
      result.cells.push_back(std::move(c));
    }
  }
  result.output.truth_csv = truth_csv.text();
  result.output.observations_csv = obs_csv.text();
  result.output.estimates_csv = est_csv.text();
  result.output.metrics_csv = metrics_csv.text();

  std::ostringstream s;
  s << "experiment: localise (" << config.name << ")\n";
  s << "runs: " << config.runs << ", seed: " << config.seed << ", sync: "
    << (config.scenario.sync == SyncMode::Synchronous ? "synchronous" : "alternating")
    << ", steps: " << config.scenario.n_steps << ", move particles: " << config.filter.move_particles << "\n";
  s << "baseline: " << baseline_name;
  if (config.baseline.kind == BaselineKind::ParticleFilter) s << " (" << config.baseline.particles << " particles)";
  s << "\nRMSE over the time steps of a run, then mean (variance) over runs, cm\n\n";
  s << "case";
  for (const auto& p : config.localise.priors) s << "\tmu_d=" << fmt(p.mean) << ",var=" << fmt(p.variance);
  s << "\n";
  std::size_t k = 0;
  for (double d : config.localise.distances) {
    std::ostringstream ds, bs;
    ds << fmt(d) << "cm (DS)";
    bs << fmt(d) << "cm (" << baseline_name << ")";
    for (std::size_t p = 0; p < config.localise.priors.size(); ++p) {
      const LocaliseCell& c = result.cells[k + p];
      ds << "\t" << fmt(c.filter.mean) << " (" << fmt(c.filter.variance) << ")";
      bs << "\t" << fmt(c.baseline.mean) << " (" << fmt(c.baseline.variance) << ")";
    }
    k += config.localise.priors.size();
    s << ds.str() << "\n";
    if (has_baseline) s << bs.str() << "\n";
  }
  if (result.cells.size() == 1) {
    const LocaliseCell& c = result.cells.front();
    s << "\nmean position error per step (cm)\nstep\tDS";
    if (has_baseline) s << "\t" << baseline_name;
    s << "\n";
    for (std::size_t t = 0; t < c.filter_error.mean.size(); ++t) {
      s << (t + 1) << "\t" << fmt(c.filter_error.mean[t]);
      if (has_baseline && t < c.baseline_error.mean.size()) s << "\t" << fmt(c.baseline_error.mean[t]);
      s << "\n";
    }
  }
  int failures = 0;
  for (const auto& c : result.cells) failures += c.filter_failures + c.baseline_failures;
  s << "\nfailed runs: " << failures << "\n";
  result.output.summary = s.str();
  return result;
}

TrackResult run_track(const ExperimentConfig& config) {
  config.validate();
  TrackResult result;
  const bool has_baseline = config.baseline.kind != BaselineKind::None;
  const std::string baseline_name = to_string(config.baseline.kind);
  ScenarioConfig scenario = config.scenario;
  scenario.objects.resize(1);
  const SingleObjectParams params = config.single_object_params();
  auto mc = monte_carlo(config.runs, config.seed, [&](int, std::uint64_t seed) {
    return single_object_run(config, scenario, params, seed, 0);
  });

  CsvWriter truth_csv(kTruthHeader);
  CsvWriter obs_csv(kObservationHeader);
  CsvWriter est_csv({"run", "time", "filter", "x", "y", "z", "error"});
  std::vector<ErrorSeries> f_runs, b_runs;
  for (std::size_t r = 0; r < mc.runs.size(); ++r) {
    if (!mc.runs[r]) {
      ++result.filter_failures;
      continue;
    }
    const SingleRun& run = *mc.runs[r];
    const int ri = static_cast<int>(r);
    add_truth(truth_csv, run.truth, ri, std::nullopt);
    add_observations(obs_csv, run.scans, ri, std::nullopt);
    if (!run.failure.empty()) result.output.failures.push_back("run " + std::to_string(r) + ": " + run.failure);
    result.filter_seconds += run.filter_seconds;
    result.baseline_seconds += run.baseline_seconds;
    if (run.filter_failed || run.filter.errors.empty()) {
      ++result.filter_failures;
    } else {
      f_runs.push_back(run.filter);
      result.filter_rmse.push_back(run.filter.rmse());
      add_estimates(est_csv, run.filter, ri, std::nullopt, "disparity");
    }
    if (has_baseline) {
      if (run.baseline_failed || !run.baseline || run.baseline->errors.empty()) {
        ++result.baseline_failures;
      } else {
        b_runs.push_back(*run.baseline);
        result.baseline_rmse.push_back(run.baseline->rmse());
        add_estimates(est_csv, *run.baseline, ri, std::nullopt, baseline_name.c_str());
      }
    }
  }
  result.filter = summarise<double>(result.filter_rmse);
  result.baseline = summarise<double>(result.baseline_rmse);
  result.filter_error = summarise_errors(f_runs);
  result.baseline_error = summarise_errors(b_runs);

  std::vector<std::string> mh{"time", "filter_rmse", "filter_error_mean", "filter_error_sd"};
  if (has_baseline)
    for (const char* h : {"baseline_rmse", "baseline_error_mean", "baseline_error_sd"}) mh.emplace_back(h);
  CsvWriter metrics_csv(mh);
  for (std::size_t t = 0; t < result.filter_error.mean.size(); ++t) {
    metrics_csv.cell(static_cast<int>(t)).cell(series_rms(f_runs, t)).cell(result.filter_error.mean[t])
        .cell(result.filter_error.sd[t]);
    if (has_baseline) {
      const bool ok = t < result.baseline_error.mean.size();
      metrics_csv.cell(ok ? series_rms(b_runs, t) : std::nan(""))
          .cell(ok ? result.baseline_error.mean[t] : std::nan(""))
          .cell(ok ? result.baseline_error.sd[t] : std::nan(""));
    }
    metrics_csv.end_row();
  }
  result.output.truth_csv = truth_csv.text();
  result.output.observations_csv = obs_csv.text();
  result.output.estimates_csv = est_csv.text();
  result.output.metrics_csv = metrics_csv.text();

  std::ostringstream s;
  s << "experiment: track (" << config.name << ")\n";
  s << "runs: " << config.runs << ", seed: " << config.seed << ", steps: " << config.scenario.n_steps
    << ", move particles: " << config.filter.move_particles << "\n";
  s << "time-averaged position RMSE, mean (variance) over runs, cm\n";
  s << "DS\t" << fmt(result.filter.mean) << " (" << fmt(result.filter.variance) << ")\n";
  if (has_baseline) {
    s << baseline_name;
    if (config.baseline.kind == BaselineKind::ParticleFilter) s << ":" << config.baseline.particles;
    s << "\t" << fmt(result.baseline.mean) << " (" << fmt(result.baseline.variance) << ")\n";
  }
  s << "failed runs: DS " << result.filter_failures << ", baseline " << result.baseline_failures << "\n";
  result.output.summary = s.str();
  return result;
}

namespace {

struct PhdRun {
  GroundTruth truth;
  std::vector<Scan> scans;
  PhdTrackResult track;
  std::vector<double> ospa;
  std::vector<int> truth_count;
};

std::vector<Vector3> observable_truth(const GroundTruth& truth, int t) {
  std::vector<Vector3> out;
  const auto& xs = truth.positions[static_cast<std::size_t>(t)];
  const auto& vis = truth.visible[static_cast<std::size_t>(t)];
  for (std::size_t o = 0; o < xs.size(); ++o)
    if (vis[0][o] || vis[1][o]) out.push_back(xs[o]);
  return out;
}

}  // namespace

PhdResult run_phd(const ExperimentConfig& config) {
  config.validate();
  const PhdModels models = config.phd_models();
  auto mc = monte_carlo(config.runs, config.seed, [&](int, std::uint64_t seed) {
    PhdRun run;
    run.truth = generate_truth(config.scenario, stream_seed(seed, Stream::Truth));
    run.scans = generate_observations(run.truth, config.scenario, stream_seed(seed, Stream::Observations));
    const CameraRig rig = CameraRig::non_rectified(config.scenario.left_camera(), config.scenario.right_camera(),
                                                   config.filter.abstract_baseline);
    run.track = phd_track(rig, run.scans, models, stream_seed(seed, Stream::Filter));
    for (const auto& step : run.track.steps) {
      const std::vector<Vector3> truth = observable_truth(run.truth, step.time);
      run.truth_count.push_back(static_cast<int>(truth.size()));
      run.ospa.push_back(ospa<double, 3>(step.estimates, truth, config.ospa));
    }
    return run;
  });

  PhdResult result;
  CsvWriter truth_csv(kTruthHeader);
  CsvWriter obs_csv(kObservationHeader);
  CsvWriter est_csv({"run", "time", "target", "x", "y", "z", "weight"});
  std::vector<int> truth_count;
  for (std::size_t r = 0; r < mc.runs.size(); ++r) {
    if (!mc.runs[r]) {
      ++result.failures;
      continue;
    }
    const PhdRun& run = *mc.runs[r];
    const int ri = static_cast<int>(r);
    add_truth(truth_csv, run.truth, ri, std::nullopt);
    add_observations(obs_csv, run.scans, ri, std::nullopt);
    std::vector<int> card, extracted;
    for (const auto& step : run.track.steps) {
      card.push_back(step.cardinality);
      extracted.push_back(static_cast<int>(step.estimates.size()));
      for (std::size_t k = 0; k < step.estimates.size(); ++k) {
        est_csv.cell(ri).cell(step.time).cell(static_cast<int>(k));
        for (int a = 0; a < 3; ++a) est_csv.cell(step.estimates[k](a));
        est_csv.cell(step.weights[k]);
        est_csv.end_row();
      }
    }
    result.ospa.push_back(run.ospa);
    result.cardinality.push_back(card);
    result.extracted.push_back(extracted);
    result.lost_components += run.track.lost_components;
    if (truth_count.empty()) truth_count = run.truth_count;
  }
  result.output.failures = mc.failures;
  result.ospa_summary = summarise_series(result.ospa);

  std::vector<std::vector<double>> card_d, extr_d;
  for (const auto& c : result.cardinality) card_d.emplace_back(c.begin(), c.end());
  for (const auto& c : result.extracted) extr_d.emplace_back(c.begin(), c.end());
  const SeriesSummary card_s = summarise_series(card_d);
  const SeriesSummary extr_s = summarise_series(extr_d);
  CsvWriter metrics_csv({"time", "ospa_mean", "ospa_sd", "cardinality_mean", "extracted_mean", "truth_count"});
  for (std::size_t t = 0; t < result.ospa_summary.mean.size(); ++t) {
    metrics_csv.cell(static_cast<int>(t)).cell(result.ospa_summary.mean[t]).cell(result.ospa_summary.sd[t]);
    metrics_csv.cell(card_s.mean[t]).cell(extr_s.mean[t]).cell(t < truth_count.size() ? truth_count[t] : -1);
    metrics_csv.end_row();
  }
  result.output.truth_csv = truth_csv.text();
  result.output.observations_csv = obs_csv.text();
  result.output.estimates_csv = est_csv.text();
  result.output.metrics_csv = metrics_csv.text();

  const std::size_t n_obj = config.scenario.objects.size();
  int hits = 0, total = 0;
  double early = 0.0, late = 0.0;
  int n_early = 0, n_late = 0;
  for (std::size_t r = 0; r < result.cardinality.size(); ++r)
    for (std::size_t t = 0; t < result.cardinality[r].size(); ++t) {
      if (t >= 10) {
        ++total;
        hits += result.cardinality[r][t] == static_cast<int>(n_obj) ? 1 : 0;
        late += result.ospa[r][t];
        ++n_late;
      } else if (t < 5) {
        early += result.ospa[r][t];
        ++n_early;
      }
    }
  std::ostringstream s;
  s << "experiment: phd (" << config.name << ")\n";
  s << "runs: " << config.runs << ", seed: " << config.seed << ", steps: " << config.scenario.n_steps
    << ", objects: " << n_obj << ", clutter lambda: " << config.scenario.clutter_lambda << "\n";
  s << "OSPA (c=" << fmt(config.ospa.cutoff) << ", p=" << fmt(config.ospa.order) << ", Euclidean, cm)\n";
  s << "mean OSPA steps 1-5: " << fmt(n_early ? early / n_early : 0.0) << "\n";
  s << "mean OSPA after step 10: " << fmt(n_late ? late / n_late : 0.0) << "\n";
  s << "cardinality = " << n_obj << " after step 10: " << hits << "/" << total << " ("
    << fmt(total ? 100.0 * hits / total : 0.0) << "%)\n";
  s << "components lost to degenerate moves: " << result.lost_components << "\n";
  s << "failed runs: " << result.failures << "\n";
  result.output.summary = s.str();
  return result;
}

CalibrateResult run_calibrate(const ExperimentConfig& config) {
  config.validate();
  const CalibrationModels models = config.calibration_models();
  const SensorState truth = SensorState::from_pose(config.scenario.right_pose);
  const CalibrationRig rig(config.scenario.left_camera(), config.scenario.right_intrinsics,
                           config.filter.abstract_baseline);

  struct Run {
    GroundTruth truth;
    std::vector<Scan> scans;
    CalibrationRun record;
    std::vector<std::vector<Vector3>> targets;
  };
  // Runs are sequential; the particle population is the parallel axis.
  auto mc = monte_carlo(
      config.runs, config.seed,
      [&](int, std::uint64_t seed) {
        Run run;
        run.truth = generate_truth(config.scenario, stream_seed(seed, Stream::Truth));
        run.scans = generate_observations(run.truth, config.scenario, stream_seed(seed, Stream::Observations));
        CalibrationPrior prior;
        prior.particles = config.calibration.particles;
        prior.sd = config.calibration.sd;
        Vector6 mean = truth.as_vector();
        if (config.calibration.prior_mean == "sampled") {
          Rng rng(stream_seed(seed, Stream::Prior));
          std::normal_distribution<double> normal;
          for (int a = 0; a < 6; ++a) mean(a) += prior.sd(a) * normal(rng);
        }
        prior.mean = SensorState::from_vector(mean);
        const CalibrationResult cal = calibrate(rig, run.scans, prior, models, stream_seed(seed, Stream::Filter));
        run.record.truth = truth;
        run.record.prior_mean = prior.mean;
        run.record.resamplings = cal.resamplings;
        run.record.failed_particle_steps = cal.failed_particle_steps;
        for (const auto& step : cal.steps) {
          run.record.times.push_back(step.time);
          run.record.error.push_back(step.estimate.mean.as_vector() - truth.as_vector());
          run.record.sd.push_back(step.estimate.sd);
          run.targets.push_back(step.targets);
        }
        if (!cal.steps.empty()) {
          const int t = cal.steps.back().time;
          run.record.final_ospa = ospa<double, 3>(cal.steps.back().targets, observable_truth(run.truth, t), config.ospa);
        }
        return run;
      },
      1);

  CalibrateResult result;
  result.seconds = mc.seconds;
  result.output.failures = mc.failures;
  CsvWriter truth_csv(kTruthHeader);
  CsvWriter obs_csv(kObservationHeader);
  CsvWriter est_csv({"run", "time", "x", "y", "z", "yaw", "pitch", "roll", "sd_x", "sd_y", "sd_z", "sd_yaw",
                     "sd_pitch", "sd_roll"});
  std::vector<std::vector<double>> comp_err[6];
  std::vector<std::vector<double>> pos_err;
  for (std::size_t r = 0; r < mc.runs.size(); ++r) {
    if (!mc.runs[r]) {
      ++result.failures;
      continue;
    }
    const Run& run = *mc.runs[r];
    const int ri = static_cast<int>(r);
    add_truth(truth_csv, run.truth, ri, std::nullopt);
    add_observations(obs_csv, run.scans, ri, std::nullopt);
    std::vector<double> pe;
    std::vector<double> ce[6];
    for (std::size_t k = 0; k < run.record.times.size(); ++k) {
      const Vector6 est = run.record.error[k] + truth.as_vector();
      est_csv.cell(ri).cell(run.record.times[k]);
      for (int a = 0; a < 6; ++a) est_csv.cell(est(a));
      for (int a = 0; a < 6; ++a) est_csv.cell(run.record.sd[k](a));
      est_csv.end_row();
      pe.push_back(run.record.error[k].head<3>().norm());
      for (int a = 0; a < 6; ++a) ce[a].push_back(std::abs(run.record.error[k](a)));
    }
    pos_err.push_back(pe);
    for (int a = 0; a < 6; ++a) comp_err[a].push_back(ce[a]);
    result.runs.push_back(run.record);
  }
  CsvWriter metrics_csv({"time", "position_error", "abs_err_x", "abs_err_y", "abs_err_z", "abs_err_yaw",
                         "abs_err_pitch", "abs_err_roll"});
  const SeriesSummary ps = summarise_series(pos_err);
  SeriesSummary cs[6];
  for (int a = 0; a < 6; ++a) cs[a] = summarise_series(comp_err[a]);
  for (std::size_t t = 0; t < ps.mean.size(); ++t) {
    metrics_csv.cell(static_cast<int>(t)).cell(ps.mean[t]);
    for (int a = 0; a < 6; ++a) metrics_csv.cell(cs[a].mean[t]);
    metrics_csv.end_row();
  }
  result.output.truth_csv = truth_csv.text();
  result.output.observations_csv = obs_csv.text();
  result.output.estimates_csv = est_csv.text();
  result.output.metrics_csv = metrics_csv.text();

  std::ostringstream s;
  s << "experiment: calibrate (" << config.name << ")\n";
  s << "runs: " << config.runs << ", seed: " << config.seed << ", sensor particles: " << config.calibration.particles
    << ", objects: " << config.scenario.objects.size() << ", steps: " << config.scenario.n_steps << "\n";
  s << "true right camera: position (" << fmt(truth.position.x()) << ", " << fmt(truth.position.y()) << ", "
    << fmt(truth.position.z()) << ") cm, yaw " << fmt(truth.orientation.x()) << " rad\n";
  s << "run\tprior_err_pos\tfinal_err_x\tfinal_err_y\tfinal_err_z\tfinal_err_yaw\tfinal_err_pitch\tfinal_err_roll\t"
       "final_ospa\tresamplings\n";
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const CalibrationRun& run = result.runs[r];
    s << r << "\t" << fmt((run.prior_mean.position - run.truth.position).norm());
    const Vector6 e = run.error.empty() ? Vector6::Zero() : run.error.back();
    for (int a = 0; a < 6; ++a) s << "\t" << fmt(e(a));
    s << "\t" << fmt(run.final_ospa) << "\t" << run.resamplings << "\n";
  }
  s << "failed runs: " << result.failures << "\n";
  result.output.summary = s.str();
  return result;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  switch (config.command) {
    case Command::Localise: return run_localise(config).output;
    case Command::Track: return run_track(config).output;
    case Command::Phd: return run_phd(config).output;
    case Command::Calibrate: return run_calibrate(config).output;
  }
  throw Error(ErrorCode::ConfigError, "unknown command");
}

}  // namespace dspace
