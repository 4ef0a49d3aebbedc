#pragma once

// Samplers for every source/target law used by the benchmarks. All of them
// are pure functions of (arguments, seed).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "entromap/errors.hpp"
#include "entromap/linalg.hpp"
#include "entromap/point_cloud.hpp"
#include "entromap/rng.hpp"

namespace entromap {

/// N(mean, cov) with cov symmetric positive definite.
class GaussianParams {
 public:
  GaussianParams(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != mean_.size())
      throw InvalidParameter("GaussianParams: mean/covariance dimension mismatch");
    require_spd(cov_, "GaussianParams covariance");
  }

  static GaussianParams standard(Index d) {
    return GaussianParams(Vector::Zero(d), Matrix::Identity(d, d));
  }

  Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

 private:
  Vector mean_;
  Matrix cov_;
};

namespace detail {
inline void require_count(Index n, const char* what) {
  if (n < 1) throw InvalidArgument(std::string(what) + " must be >= 1");
}

inline Matrix standard_normal(Index rows, Index cols, Engine& eng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(rows, cols);
  // Fill row by row so a prefix of rows does not depend on `rows`.
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) z(i, k) = normal(eng);
  return z;
}
}  // namespace detail

/// n i.i.d. points uniform on [-1, 1]^d.
inline PointCloud sample_uniform_cube(Index n, Index d, Seed seed) {
  detail::require_count(n, "sample_uniform_cube: n");
  detail::require_count(d, "sample_uniform_cube: d");
  Engine eng = make_engine(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) x(i, k) = unif(eng);
  return PointCloud(std::move(x));
}

/// n i.i.d. draws mean + L z with L L^T = cov (Cholesky).
inline PointCloud sample_gaussian(const GaussianParams& params, Index n, Seed seed) {
  detail::require_count(n, "sample_gaussian: n");
  Eigen::LLT<Matrix> llt(params.cov());
  if (llt.info() != Eigen::Success)
    throw InvalidParameter("sample_gaussian: covariance factorization failed");
  Engine eng = make_engine(seed);
  const Matrix z = detail::standard_normal(n, params.dim(), eng);
  Matrix x = z * llt.matrixL().transpose();
  x.rowwise() += params.mean().transpose();
  return PointCloud(std::move(x));
}

/// Scale a such that the Monte-Carlo mean of (a |arctan(Z/beta)|^{1/d})^2
/// over `mc_points` standard normals equals d.
inline double calibrate_elliptical_radius(Index d, double beta, Index mc_points, Seed seed) {
  detail::require_count(d, "calibrate_elliptical_radius: d");
  if (!(beta > 0.0)) throw InvalidArgument("calibrate_elliptical_radius: beta must be > 0");
  if (mc_points < 1) throw InvalidArgument("calibrate_elliptical_radius: mc_points must be >= 1");
  Engine eng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double power = 2.0 / static_cast<double>(d);
  double sum = 0.0;
  for (Index i = 0; i < mc_points; ++i)
    sum += std::pow(std::abs(std::atan(normal(eng) / beta)), power);
  const double mean = sum / static_cast<double>(mc_points);
  if (!(mean > 0.0)) throw NumericalError("calibrate_elliptical_radius: degenerate radius sample");
  return std::sqrt(static_cast<double>(d) / mean);
}

inline constexpr double kEllipticalBeta = 2.0;
inline constexpr Index kEllipticalCalibrationPoints = 10'000'000;

/// Compactly supported elliptical law: X = R cov^{1/2} U, U uniform on the
/// sphere (normalized Gaussian), R = radius_scale |arctan(Z/beta)|^{1/d}.
inline PointCloud sample_elliptical(const Matrix& cov, Index n, double beta, double radius_scale,
                                    Seed seed) {
  detail::require_count(n, "sample_elliptical: n");
  if (!(beta > 0.0)) throw InvalidArgument("sample_elliptical: beta must be > 0");
  if (!(radius_scale > 0.0)) throw InvalidArgument("sample_elliptical: radius_scale must be > 0");
  const Matrix root = sqrtm_psd(cov);
  const Index d = cov.rows();
  Engine eng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double inv_d = 1.0 / static_cast<double>(d);
  Matrix u(n, d);
  Vector radius(n);
  for (Index i = 0; i < n; ++i) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (Index k = 0; k < d; ++k) {
        u(i, k) = normal(eng);
        norm2 += u(i, k) * u(i, k);
      }
    } while (norm2 == 0.0);
    u.row(i) /= std::sqrt(norm2);
    radius(i) = radius_scale * std::pow(std::abs(std::atan(normal(eng) / beta)), inv_d);
  }
  Matrix x = radius.asDiagonal() * (u * root);
  return PointCloud(std::move(x));
}

/// Random SPD covariance with trace gamma: M is d x k standard normal with
/// k = round(d / alpha_ratio), A~ = M M^T / k, A = gamma A~ / Tr(A~).
/// The result is exactly symmetric.
inline Matrix random_covariance(Index d, double gamma, double alpha_ratio, Seed seed) {
  detail::require_count(d, "random_covariance: d");
  if (!(gamma > 0.0)) throw InvalidArgument("random_covariance: gamma must be > 0");
  if (!(alpha_ratio > 0.0 && alpha_ratio < 1.0))
    throw InvalidArgument("random_covariance: alpha_ratio must lie in (0, 1)");
  const auto k = static_cast<Index>(std::lround(static_cast<double>(d) / alpha_ratio));
  if (k < d) throw InvalidArgument("random_covariance: need round(d / alpha_ratio) >= d");
  Engine eng = make_engine(seed);
  const Matrix m = detail::standard_normal(d, k, eng);
  Matrix a = Matrix::Zero(d, d);
  a.selfadjointView<Eigen::Lower>().rankUpdate(m, 1.0 / static_cast<double>(k));
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  return a * (gamma / a.trace());
}

inline constexpr double kCovarianceAlphaRatio = 1.0 / 3.0;

enum class CovarianceSpread { concentrated, spread };

/// Trace presets for the random target covariances: concentrated uses
/// 0.2 (d=2) / 5 (d=15), spread uses 5 (d=2) / 20 (d=15). Other dimensions
/// fall back to the nearer preset, scaled by d/2 or d/15 respectively.
inline double covariance_gamma(Index d, CovarianceSpread spread) {
  const bool conc = spread == CovarianceSpread::concentrated;
  if (d == 2) return conc ? 0.2 : 5.0;
  if (d == 15) return conc ? 5.0 : 20.0;
  if (d < 8) return (conc ? 0.2 : 5.0) * static_cast<double>(d) / 2.0;
  return (conc ? 5.0 : 20.0) * static_cast<double>(d) / 15.0;
}

}  // namespace entromap
