#include "dspace/gaussian.hpp"

#include <algorithm>

#include <cmath>
#include <numbers>

namespace dspace {

bool is_spd(const MatrixX& m, double symmetry_tolerance) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > symmetry_tolerance * std::max(1.0, m.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<MatrixX> solver(symmetrised(m), Eigen::EigenvaluesOnly);
  return solver.info() == Eigen::Success && solver.eigenvalues().minCoeff() > 0.0;
}

MatrixX make_spd(const MatrixX& m, double jitter) {
  MatrixX s = symmetrised(m);
  if (!s.allFinite()) throw Error(ErrorCode::NumericalDegeneracy, "covariance is not finite");
  Eigen::LLT<MatrixX> llt(s);
  if (llt.info() == Eigen::Success && is_spd(s)) return s;
  // Jitter relative to the matrix scale so mixed units (px, px/s) behave alike.
  const double scale = std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
  s.diagonal().array() += jitter * scale;
  if (!is_spd(s)) throw Error(ErrorCode::NumericalDegeneracy, "covariance lost positive definiteness");
  return s;
}

void check_state(const GaussianState& state) {
  if (state.mean.size() != 3 && state.mean.size() != 6)
    throw Error(ErrorCode::InvalidInput, "state must be 3-D or 6-D");
  if (state.covariance.rows() != state.mean.size() || state.covariance.cols() != state.mean.size())
    throw Error(ErrorCode::InvalidInput, "covariance shape does not match the mean");
  if (!state.mean.allFinite()) throw Error(ErrorCode::InvalidInput, "mean is not finite");
  if (!is_spd(state.covariance)) throw Error(ErrorCode::InvalidInput, "covariance is not SPD");
}

double gaussian_log_pdf(const VectorX& x, const VectorX& mean, const MatrixX& covariance) {
  Eigen::LLT<MatrixX> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NumericalDegeneracy, "covariance not positive definite");
  const VectorX r = x - mean;
  const VectorX w = llt.matrixL().solve(r);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (w.squaredNorm() + log_det + static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi));
}

MatrixX sampling_factor(const MatrixX& covariance) {
  const MatrixX s = symmetrised(covariance);
  Eigen::LLT<MatrixX> llt(s);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<MatrixX> solver(s);
  if (solver.info() != Eigen::Success || solver.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, solver.eigenvalues().maxCoeff()))
    throw Error(ErrorCode::NumericalDegeneracy, "covariance is not positive semidefinite");
  return solver.eigenvectors() * solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

MomentFit fit_moments(const MatrixX& samples) {
  const Eigen::Index n = samples.cols();
  if (n < 2) throw Error(ErrorCode::DegeneratePrediction, "need at least two samples");
  MomentFit fit;
  fit.mean = samples.rowwise().mean();
  const MatrixX centred = samples.colwise() - fit.mean;
  fit.covariance = centred * centred.transpose() / static_cast<double>(n - 1);
  return fit;
}

MomentFit fit_weighted_moments(const MatrixX& samples, std::span<const double> weights) {
  const Eigen::Index n = samples.cols();
  if (static_cast<Eigen::Index>(weights.size()) != n)
    throw Error(ErrorCode::InvalidInput, "weight count does not match sample count");
  const Eigen::Map<const VectorX> w(weights.data(), n);
  const double total = w.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::DegeneratePrediction, "zero total weight");
  const VectorX wn = w / total;
  const double sum_sq = wn.squaredNorm();
  if (!(sum_sq < 1.0)) throw Error(ErrorCode::DegeneratePrediction, "weight concentrated on one sample");
  MomentFit fit;
  fit.mean = samples * wn;
  const MatrixX centred = samples.colwise() - fit.mean;
  fit.covariance = centred * wn.asDiagonal() * centred.transpose() / (1.0 - sum_sq);
  return fit;
}

MatrixX standard_normal(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> normal;
  MatrixX out(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

}  // namespace dspace
