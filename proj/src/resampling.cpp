#include "dspace/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dspace/types.hpp"

namespace dspace {

double effective_sample_size(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  double sum_sq = 0.0;
  for (double w : weights) sum_sq += (w / total) * (w / total);
  return 1.0 / sum_sq;
}

std::vector<int> systematic_resample(std::span<const double> weights, int n, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0) || weights.empty())
    throw Error(ErrorCode::NormalisationFailure, "cannot resample from zero total weight");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double offset = uniform(rng);
  std::vector<int> indices(static_cast<std::size_t>(n));
  double cumulative = weights[0] / total;
  std::size_t source = 0;
  for (int i = 0; i < n; ++i) {
    const double pointer = (i + offset) / n;
    while (pointer > cumulative && source + 1 < weights.size()) cumulative += weights[++source] / total;
    indices[static_cast<std::size_t>(i)] = static_cast<int>(source);
  }
  return indices;
}

std::vector<double> normalise_log_weights(std::span<const double> log_weights) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights)
    if (std::isfinite(lw)) peak = std::max(peak, lw);
  if (!std::isfinite(peak)) return {};
  std::vector<double> out(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::isnan(log_weights[i]) ? 0.0 : std::exp(log_weights[i] - peak);
    total += out[i];
  }
  for (double& w : out) w /= total;
  return out;
}

}  // namespace dspace
