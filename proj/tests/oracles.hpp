#ifndef DSPACE_TESTS_ORACLES_HPP_
#define DSPACE_TESTS_ORACLES_HPP_

// Reference implementations written from the textbook formulas, sharing no
// code with the library beyond Eigen containers. Tests compare the library
// against these.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Matrix34d = Eigen::Matrix<double, 3, 4>;

inline Matrix3d rotation(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw, Vector3d::UnitY()) * Eigen::AngleAxisd(pitch, Vector3d::UnitX()) *
          Eigen::AngleAxisd(roll, Vector3d::UnitZ()))
      .toRotationMatrix();
}

/// Pinhole camera from focal length (mm), pixel pitch (um) and principal point.
struct Pinhole {
  double fu = 0.0, fv = 0.0, u0 = 0.0, v0 = 0.0;
  Vector3d centre = Vector3d::Zero();
  Matrix3d r = Matrix3d::Identity();  // camera axes in world coordinates

  Pinhole(double f_mm, double du_um, double dv_um, double pu, double pv, const Vector3d& c, double yaw,
          double pitch, double roll)
      : fu(f_mm * 1000.0 / du_um), fv(f_mm * 1000.0 / dv_um), u0(pu), v0(pv), centre(c),
        r(rotation(yaw, pitch, roll)) {}

  static Pinhole table1(const Vector3d& c, double yaw, double pitch = 0.0, double roll = 0.0) {
    return Pinhole(-8.0, 8.9, 9.0, 400.0, 300.0, c, yaw, pitch, roll);
  }

  Matrix3d k() const {
    Matrix3d m;
    m << fu, 0, u0, 0, fv, v0, 0, 0, 1;
    return m;
  }

  Matrix34d matrix() const {
    Matrix34d p;
    p.leftCols<3>() = k() * r.transpose();
    p.col(3) = -k() * r.transpose() * centre;
    return p;
  }

  // Camera-frame coordinates scaled by K: (p1, p2, depth).
  Vector3d image_homogeneous(const Vector3d& x) const { return k() * (r.transpose() * (x - centre)); }
};

/// Dehomogenised P x by explicit loops.
inline Vector2d naive_project(const Matrix34d& p, const Vector3d& x) {
  const double xh[4] = {x.x(), x.y(), x.z(), 1.0};
  double h[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) h[i] += p(i, j) * xh[j];
  return Vector2d(h[0] / h[2], h[1] / h[2]);
}

/// Disparity coordinates of a camera paired with a virtual camera shifted
/// by baseline b along its own x axis: y = (u, v, fu b / depth).
struct Disparity {
  Pinhole cam;
  double b;

  double depth(const Vector3d& x) const { return (cam.r.transpose() * (x - cam.centre)).z(); }

  Vector3d to_y(const Vector3d& x) const {
    const Vector3d p = cam.image_homogeneous(x);
    return Vector3d(p.x() / p.z(), p.y() / p.z(), cam.fu * b / p.z());
  }

  Vector3d to_x(const Vector3d& y) const {
    const double lambda = cam.fu * b / y.z();
    const Vector3d ray((y.x() - cam.u0) / cam.fu, (y.y() - cam.v0) / cam.fv, 1.0);
    return cam.centre + lambda * cam.r * ray;
  }

  // Velocity maps by the chain rule.
  Vector3d to_ydot(const Vector3d& x, const Vector3d& xdot) const {
    const Vector3d p = cam.image_homogeneous(x);
    const Vector3d pd = cam.k() * (cam.r.transpose() * xdot);
    const double u = p.x() / p.z(), v = p.y() / p.z(), d = cam.fu * b / p.z();
    return Vector3d((pd.x() - u * pd.z()) / p.z(), (pd.y() - v * pd.z()) / p.z(), -d * pd.z() / p.z());
  }

  Vector3d to_xdot(const Vector3d& y, const Vector3d& ydot) const {
    const double lambda = cam.fu * b / y.z();
    const double lambda_dot = -lambda * ydot.z() / y.z();
    const Vector3d ray((y.x() - cam.u0) / cam.fu, (y.y() - cam.v0) / cam.fv, 1.0);
    const Vector3d ray_dot(ydot.x() / cam.fu, ydot.y() / cam.fv, 0.0);
    return lambda_dot * cam.r * ray + lambda * cam.r * ray_dot;
  }
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  long kept = 0;
};

inline Moments sample_moments(const Eigen::MatrixXd& s) {
  Moments m;
  m.kept = s.cols();
  m.mean = s.rowwise().mean();
  const Eigen::MatrixXd c = s.colwise() - m.mean;
  m.cov = c * c.transpose() / double(s.cols() - 1);
  return m;
}

/// Monte-Carlo transport of a 3-D or 6-D disparity Gaussian from `src` to
/// `dst`, with a constant-velocity step of length `elapsed` and velocity noise
/// variance `q_step` added after the step. Points behind either camera are
/// rejected.
inline Moments transport(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, const Disparity& src,
                         const Disparity& dst, double elapsed, double q_step, long n, std::uint64_t seed) {
  const int dim = static_cast<int>(mean.size());
  const bool moving = dim == 6;
  const Eigen::MatrixXd l = cov.llt().matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd out(dim, n);
  long kept = 0;
  Eigen::VectorXd e(dim);
  for (long i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) e(k) = normal(rng);
    const Eigen::VectorXd y = mean + l * e;
    Vector3d w(normal(rng), normal(rng), normal(rng));
    const Vector3d yp = y.head<3>();
    if (!(yp.z() * src.cam.fu * src.b > 0.0)) continue;
    Vector3d x = src.to_x(yp);
    Vector3d v = Vector3d::Zero();
    if (moving) v = src.to_xdot(yp, y.tail<3>());
    if (moving && elapsed > 0.0) {
      x += v * elapsed;
      v += std::sqrt(q_step) * w;
    }
    if (!(dst.depth(x) > 0.0)) continue;
    out.col(kept).head<3>() = dst.to_y(x);
    if (moving) out.col(kept).tail<3>() = dst.to_ydot(x, v);
    ++kept;
  }
  out.conservativeResize(dim, kept);
  return sample_moments(out);
}

/// Posterior mean of a 3-D Gaussian prior under a linear 2-D observation,
/// by quadrature on a grid over the prior's whitened coordinates.
inline Vector3d grid_posterior_mean(const Vector3d& m, const Matrix3d& p, const Eigen::Matrix<double, 2, 3>& h,
                                    const Vector2d& z, const Eigen::Matrix2d& r, int points = 121,
                                    double half_width = 7.0) {
  const Matrix3d l = p.llt().matrixL();
  const Eigen::Matrix2d r_inv = r.inverse();
  const double step = 2.0 * half_width / (points - 1);
  std::vector<double> logw;
  std::vector<Vector3d> ys;
  logw.reserve(static_cast<std::size_t>(points) * points * points);
  ys.reserve(logw.capacity());
  for (int i = 0; i < points; ++i)
    for (int j = 0; j < points; ++j)
      for (int k = 0; k < points; ++k) {
        const Vector3d e(-half_width + i * step, -half_width + j * step, -half_width + k * step);
        const Vector3d y = m + l * e;
        const Vector2d res = z - h * y;
        logw.push_back(-0.5 * e.squaredNorm() - 0.5 * res.dot(r_inv * res));
        ys.push_back(y);
      }
  const double top = *std::max_element(logw.begin(), logw.end());
  Vector3d num = Vector3d::Zero();
  double den = 0.0;
  for (std::size_t q = 0; q < ys.size(); ++q) {
    const double w = std::exp(logw[q] - top);
    num += w * (ys[q] - m);
    den += w;
  }
  return m + num / den;
}

/// OSPA by exhaustive search over injective assignments.
template <typename Point>
double ospa_brute(const std::vector<Point>& x, const std::vector<Point>& y, double c, double p) {
  if (x.empty() && y.empty()) return 0.0;
  if (x.size() > y.size()) return ospa_brute(y, x, c, p);
  const std::size_t m = x.size(), n = y.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += std::pow(std::min(c, (x[i] - y[perm[i]]).norm()), p);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow((best + std::pow(c, p) * double(n - m)) / double(n), 1.0 / p);
}

/// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle

#endif  // DSPACE_TESTS_ORACLES_HPP_
