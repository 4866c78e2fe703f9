#ifndef DSPACE_METRICS_HPP_
#define DSPACE_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "dspace/types.hpp"

namespace dspace {

/// Minimum-cost perfect assignment of rows to columns (rows <= cols).
/// Returns the column assigned to each row. Hungarian method with
/// potentials, O(n^2 m).
template <typename Scalar>
std::vector<int> hungarian(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n > m) throw Error(ErrorCode::InvalidInput, "assignment needs rows <= cols");
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  // 1-based arrays; column 0 is a virtual source.
  std::vector<Scalar> u(n + 1, Scalar(0)), v(m + 1, Scalar(0));
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<Scalar> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      Scalar delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const Scalar cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

template <typename Scalar>
struct OspaParamsT {
  Scalar cutoff = Scalar(20);
  Scalar order = Scalar(1);

  void validate() const {
    if (!(cutoff > Scalar(0))) throw Error(ErrorCode::InvalidParameter, "OSPA cutoff must be > 0");
    if (!(order >= Scalar(1))) throw Error(ErrorCode::InvalidParameter, "OSPA order must be >= 1");
  }
};
using OspaParams = OspaParamsT<double>;

template <typename Scalar, int Dim>
using PointSet = std::vector<Eigen::Matrix<Scalar, Dim, 1>>;

/// OSPA distance with an arbitrary base distance d(x_i, y_j).
template <typename Scalar>
Scalar ospa_from_distances(int m, int n, const std::function<Scalar(int, int)>& distance,
                           const OspaParamsT<Scalar>& params) {
  params.validate();
  using std::min;
  using std::pow;
  if (m == 0 && n == 0) return Scalar(0);
  if (m > n) return ospa_from_distances<Scalar>(n, m, [&](int i, int j) { return distance(j, i); }, params);
  const Scalar c = params.cutoff;
  const Scalar p = params.order;
  Scalar total = Scalar(0);
  if (m > 0) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cost(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) cost(i, j) = pow(min(c, distance(i, j)), p);
    const std::vector<int> a = hungarian<Scalar>(cost);
    for (int i = 0; i < m; ++i) total += cost(i, a[static_cast<std::size_t>(i)]);
  }
  total += pow(c, p) * Scalar(n - m);
  return pow(total / Scalar(n), Scalar(1) / p);
}

/// OSPA with Euclidean base distance.
template <typename Scalar, int Dim>
Scalar ospa(const PointSet<Scalar, Dim>& x, const PointSet<Scalar, Dim>& y, const OspaParamsT<Scalar>& params) {
  return ospa_from_distances<Scalar>(
      static_cast<int>(x.size()), static_cast<int>(y.size()),
      [&](int i, int j) { return (x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)]).norm(); },
      params);
}

/// OSPA with Mahalanobis base distance; `x_covariances[i]` scales the
/// distance from x_i (e.g. the estimate's covariance).
template <typename Scalar, int Dim>
Scalar ospa_mahalanobis(const PointSet<Scalar, Dim>& x,
                        const std::vector<Eigen::Matrix<Scalar, Dim, Dim>>& x_covariances,
                        const PointSet<Scalar, Dim>& y, const OspaParamsT<Scalar>& params) {
  if (x_covariances.size() != x.size())
    throw Error(ErrorCode::InvalidInput, "one covariance per estimate is required");
  std::vector<Eigen::LLT<Eigen::Matrix<Scalar, Dim, Dim>>> factors;
  for (const auto& c : x_covariances) factors.emplace_back(c);
  return ospa_from_distances<Scalar>(
      static_cast<int>(x.size()), static_cast<int>(y.size()),
      [&](int i, int j) {
        const auto diff = (x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)]).eval();
        return factors[static_cast<std::size_t>(i)].matrixL().solve(diff).norm();
      },
      params);
}

/// Root mean square Euclidean error of one run over its time steps.
template <typename Scalar, int Dim>
Scalar rmse(const PointSet<Scalar, Dim>& estimates, const PointSet<Scalar, Dim>& truth) {
  if (estimates.size() != truth.size()) throw Error(ErrorCode::InvalidInput, "estimate/truth length mismatch");
  if (estimates.empty()) throw Error(ErrorCode::InvalidInput, "RMSE of an empty series");
  Scalar sum = Scalar(0);
  for (std::size_t t = 0; t < truth.size(); ++t) sum += (estimates[t] - truth[t]).squaredNorm();
  using std::sqrt;
  return sqrt(sum / Scalar(truth.size()));
}

template <typename Scalar>
struct SampleSummaryT {
  Scalar mean = Scalar(0);
  Scalar variance = Scalar(0);  ///< unbiased; 0 for a single sample
  Scalar sd() const {
    using std::sqrt;
    return sqrt(variance);
  }
};
using SampleSummary = SampleSummaryT<double>;

template <typename Scalar>
SampleSummaryT<Scalar> summarise(std::span<const Scalar> values) {
  SampleSummaryT<Scalar> s;
  if (values.empty()) return s;
  for (Scalar v : values) s.mean += v;
  s.mean /= Scalar(values.size());
  if (values.size() > 1) {
    for (Scalar v : values) s.variance += (v - s.mean) * (v - s.mean);
    s.variance /= Scalar(values.size() - 1);
  }
  return s;
}

/// Per-run RMSE, then mean and variance across runs.
template <typename Scalar, int Dim>
SampleSummaryT<Scalar> rmse_over_runs(const std::vector<PointSet<Scalar, Dim>>& estimates,
                                      const std::vector<PointSet<Scalar, Dim>>& truth) {
  if (estimates.size() != truth.size()) throw Error(ErrorCode::InvalidInput, "run count mismatch");
  std::vector<Scalar> per_run;
  for (std::size_t r = 0; r < estimates.size(); ++r) per_run.push_back(rmse<Scalar, Dim>(estimates[r], truth[r]));
  return summarise<Scalar>(per_run);
}

}  // namespace dspace

#endif  // DSPACE_METRICS_HPP_
