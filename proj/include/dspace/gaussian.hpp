#ifndef DSPACE_GAUSSIAN_HPP_
#define DSPACE_GAUSSIAN_HPP_

#include <span>
#include <vector>

#include "dspace/random.hpp"
#include "dspace/types.hpp"

namespace dspace {

/// Gaussian belief over a (possibly velocity-augmented) disparity space:
/// mean (u, v, d) or (u, v, d, du, dv, dd).
struct GaussianState {
  VectorX mean;
  MatrixX covariance;
  FrameId frame;

  int dim() const { return static_cast<int>(mean.size()); }
  bool dynamic() const { return mean.size() == 6; }
  Vector3 position() const { return mean.head<3>(); }
};

inline MatrixX symmetrised(const MatrixX& m) { return 0.5 * (m + m.transpose()); }

/// Symmetric with a strictly positive smallest eigenvalue.
bool is_spd(const MatrixX& m, double symmetry_tolerance = 1e-12);

/// Symmetrise and, if the factorisation fails, add jitter * max(1, max diag) * I
/// once.
/// Throws NumericalDegeneracy if the result is still not positive definite.
MatrixX make_spd(const MatrixX& m, double jitter = 1e-9);

void check_state(const GaussianState& state);

double gaussian_log_pdf(const VectorX& x, const VectorX& mean, const MatrixX& covariance);

/// Lower Cholesky factor; falls back to a symmetric eigen square root for
/// semidefinite input (zero-variance directions sample as constants).
MatrixX sampling_factor(const MatrixX& covariance);

/// Unbiased sample mean/covariance of the columns of `samples`, optionally
/// weighted (weights need not be normalised).
struct MomentFit {
  VectorX mean;
  MatrixX covariance;
};
MomentFit fit_moments(const MatrixX& samples);
MomentFit fit_weighted_moments(const MatrixX& samples, std::span<const double> weights);

/// Standard normal draws as a rows x cols matrix.
MatrixX standard_normal(Rng& rng, int rows, int cols);

}  // namespace dspace

#endif  // DSPACE_GAUSSIAN_HPP_
