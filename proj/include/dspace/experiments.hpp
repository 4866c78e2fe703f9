#ifndef DSPACE_EXPERIMENTS_HPP_
#define DSPACE_EXPERIMENTS_HPP_

#include <string>
#include <vector>

#include "dspace/baselines.hpp"
#include "dspace/config.hpp"

namespace dspace {

/// CSV bodies and summary text of one experiment; the CLI writes them out.
struct ExperimentOutput {
  std::string truth_csv;
  std::string observations_csv;
  std::string estimates_csv;
  std::string metrics_csv;
  std::string summary;
  std::vector<std::string> failures;
};

/// Seeds of the independent streams inside one Monte-Carlo run.
enum class Stream : std::uint64_t { Truth = 1, Observations, Filter, Baseline, Prior };
std::uint64_t stream_seed(std::uint64_t run_seed, Stream s, std::uint64_t sub = 0);

/// Estimate after the last update at each time step, aligned with truth.
struct ErrorSeries {
  std::vector<int> times;
  std::vector<Vector3> estimates;
  std::vector<double> errors;  ///< Euclidean position error (cm)
  double rmse() const;
};

struct LocaliseCell {
  double distance = 0.0;
  DisparityPrior prior;
  std::vector<double> filter_rmse;    ///< per successful run
  std::vector<double> baseline_rmse;  ///< empty without a baseline
  SampleSummary filter;
  SampleSummary baseline;
  SeriesSummary filter_error;  ///< per time step over runs
  SeriesSummary baseline_error;
  int filter_failures = 0;
  int baseline_failures = 0;
  int baseline_divergences = 0;
};

struct LocaliseResult {
  std::vector<LocaliseCell> cells;  ///< distance-major
  ExperimentOutput output;
};

/// Static single-object localisation over the (distance, prior) grid.
LocaliseResult run_localise(const ExperimentConfig& config);

struct TrackResult {
  std::vector<double> filter_rmse;
  std::vector<double> baseline_rmse;
  SampleSummary filter;
  SampleSummary baseline;
  SeriesSummary filter_error;
  SeriesSummary baseline_error;
  double filter_seconds = 0.0;
  double baseline_seconds = 0.0;
  int filter_failures = 0;
  int baseline_failures = 0;
  ExperimentOutput output;
};

/// Single moving object tracked by the disparity filter and the baseline.
TrackResult run_track(const ExperimentConfig& config);

struct PhdResult {
  std::vector<std::vector<double>> ospa;     ///< [run][time]
  std::vector<std::vector<int>> cardinality;  ///< [run][time]
  std::vector<std::vector<int>> extracted;    ///< [run][time] extracted target count
  SeriesSummary ospa_summary;
  int lost_components = 0;
  int failures = 0;
  ExperimentOutput output;
};

PhdResult run_phd(const ExperimentConfig& config);

struct CalibrationRun {
  SensorState truth;
  SensorState prior_mean;
  std::vector<int> times;
  std::vector<Vector6> error;  ///< estimate - truth per time step
  std::vector<Vector6> sd;
  double final_ospa = 0.0;
  int resamplings = 0;
  int failed_particle_steps = 0;
};

struct CalibrateResult {
  std::vector<CalibrationRun> runs;  ///< successful runs
  int failures = 0;
  double seconds = 0.0;
  ExperimentOutput output;
};

CalibrateResult run_calibrate(const ExperimentConfig& config);

/// Dispatch on config.command; returns the CSV/summary bundle.
ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Slope of the least-squares line through (i, values[i]).
double trend_slope(const std::vector<double>& values);

}  // namespace dspace

#endif  // DSPACE_EXPERIMENTS_HPP_
