#pragma once

// Spectral matrix functions for symmetric matrices. Every closed-form
// Gaussian formula and the elliptical sampler go through these.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "entromap/errors.hpp"

namespace entromap {

inline constexpr double kSymmetryTolerance = 1e-10;

inline double max_asymmetry(const Eigen::MatrixXd& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Throws InvalidParameter unless `m` is square and symmetric to
/// kSymmetryTolerance (scaled by max(1, max|m_ij|)).
inline void require_symmetric(const Eigen::MatrixXd& m, const std::string& what) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw InvalidParameter(what + ": matrix must be square and non-empty");
  if (!m.allFinite()) throw InvalidParameter(what + ": matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (max_asymmetry(m) > kSymmetryTolerance * scale)
    throw InvalidParameter(what + ": matrix is not symmetric (max asymmetry " +
                           std::to_string(max_asymmetry(m)) + ")");
}

/// Eigendecomposition of a symmetric matrix with ascending eigenvalues.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;

  explicit SymmetricEigen(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrize(m));
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
    values = solver.eigenvalues();
    vectors = solver.eigenvectors();
  }

  double min() const { return values(0); }
  double max() const { return values(values.size() - 1); }

  /// V f(Lambda) V^T, symmetrized.
  template <class F>
  Eigen::MatrixXd apply(F&& f) const {
    Eigen::VectorXd mapped(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) mapped(i) = f(values(i));
    return symmetrize(vectors * mapped.asDiagonal() * vectors.transpose());
  }
};

/// Symmetric PSD square root. Eigenvalues down to -1e-10 * max(1, ||C||)
/// are clamped to zero; anything more negative is rejected.
inline Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& c) {
  require_symmetric(c, "sqrtm_psd");
  const SymmetricEigen eig(c);
  const double floor = -1e-10 * std::max(1.0, std::abs(eig.max()));
  if (eig.min() < floor)
    throw InvalidParameter("sqrtm_psd: matrix is not positive semidefinite (min eigenvalue " +
                           std::to_string(eig.min()) + ")");
  return eig.apply([](double l) { return std::sqrt(std::max(l, 0.0)); });
}

/// A^p for symmetric positive definite A and any real power p.
inline Eigen::MatrixXd spd_power(const Eigen::MatrixXd& a, double p, const std::string& what) {
  require_symmetric(a, what);
  const SymmetricEigen eig(a);
  if (!(eig.min() > 0.0))
    throw InvalidParameter(what + ": matrix is not positive definite (min eigenvalue " +
                           std::to_string(eig.min()) + ")");
  return eig.apply([p](double l) { return std::pow(l, p); });
}

/// Throws unless `a` is symmetric positive definite.
inline void require_spd(const Eigen::MatrixXd& a, const std::string& what) {
  require_symmetric(a, what);
  const SymmetricEigen eig(a);
  if (!(eig.min() > 0.0))
    throw InvalidParameter(what + ": matrix is not positive definite (min eigenvalue " +
                           std::to_string(eig.min()) + ")");
}

/// Largest absolute eigenvalue of a symmetric matrix (its spectral norm).
inline double spectral_norm_symmetric(const Eigen::MatrixXd& m) {
  const SymmetricEigen eig(m);
  return std::max(std::abs(eig.min()), std::abs(eig.max()));
}

}  // namespace entromap
