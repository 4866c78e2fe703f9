#ifndef DSPACE_RESAMPLING_HPP_
#define DSPACE_RESAMPLING_HPP_

#include <span>
#include <vector>

#include "dspace/random.hpp"

namespace dspace {

/// 1 / sum(w^2) for weights normalised to sum 1.
double effective_sample_size(std::span<const double> weights);

/// Systematic resampling: one uniform offset, n evenly spaced pointers into
/// the cumulative weights. Weights need not be normalised.
std::vector<int> systematic_resample(std::span<const double> weights, int n, Rng& rng);

/// Normalise log-weights in place (log-sum-exp); returns the linear weights.
/// Returns an empty vector if every weight is -inf or NaN.
std::vector<double> normalise_log_weights(std::span<const double> log_weights);

}  // namespace dspace

#endif  // DSPACE_RESAMPLING_HPP_
