#pragma once

// Closed forms for transport between P = N(0, A) and Q = N(b, B).
//
// Matrix functions go through the eigendecomposition of a symmetric matrix.
// Differences of square roots, e.g. (M + eta I)^{1/2} - eta^{1/2} I, are
// evaluated on the spectrum in cancellation-free form so that both the
// eps -> 0 and eps -> infinity regimes stay accurate.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>

#include "entromap/errors.hpp"
#include "entromap/linalg.hpp"
#include "entromap/point_cloud.hpp"

namespace entromap::gaussian {

using entromap::sqrtm_psd;

/// Source N(mu_P, A), target N(b, B). The formulas below are stated for
/// mu_P = 0; a non-zero source mean is handled by translating queries.
struct GaussianPair {
  Matrix a;
  Matrix b_cov;
  Vector b;
  Vector source_mean;

  GaussianPair(Matrix a_, Matrix b_cov_, Vector b_ = Vector(), Vector source_mean_ = Vector())
      : a(std::move(a_)), b_cov(std::move(b_cov_)), b(std::move(b_)), source_mean(std::move(source_mean_)) {
    require_spd(a, "GaussianPair source covariance");
    require_spd(b_cov, "GaussianPair target covariance");
    if (a.rows() != b_cov.rows()) throw InvalidParameter("GaussianPair: covariance dimension mismatch");
    if (b.size() == 0) b = Vector::Zero(a.rows());
    if (source_mean.size() == 0) source_mean = Vector::Zero(a.rows());
    if (b.size() != a.rows() || source_mean.size() != a.rows())
      throw InvalidParameter("GaussianPair: mean dimension mismatch");
  }

  Index dim() const { return a.rows(); }
};

enum class CoeffKind { brenier, entropic, self, debiased };

inline const char* to_string(CoeffKind k) {
  switch (k) {
    case CoeffKind::brenier: return "brenier";
    case CoeffKind::entropic: return "entropic";
    case CoeffKind::self: return "self";
    case CoeffKind::debiased: return "debiased";
  }
  return "?";
}

/// A linear coefficient C in a map x -> C x + b.
struct CoeffMatrix {
  Matrix value;
  CoeffKind kind;
  double epsilon;
};

namespace detail {

inline void require_epsilon(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidArgument("epsilon must be finite and >= 0");
}

// Shared factorization: A^{1/2}, A^{-1/2}, A^{-1} and the spectrum of
// M = A^{1/2} B A^{1/2}.
struct Factors {
  Matrix a_half;
  Matrix a_inv_half;
  Matrix a_inv;
  SymmetricEigen a_eig;
  SymmetricEigen m_eig;

  Factors(const Matrix& a, const Matrix& b)
      : a_eig(check(a, b)), m_eig(Matrix::Identity(1, 1)) {
    if (!(a_eig.min() > 0.0)) throw InvalidParameter("covariance A is singular");
    a_half = a_eig.apply([](double l) { return std::sqrt(l); });
    a_inv_half = a_eig.apply([](double l) { return 1.0 / std::sqrt(l); });
    a_inv = a_eig.apply([](double l) { return 1.0 / l; });
    m_eig = SymmetricEigen(symmetrize(a_half * b * a_half));
  }

  static const Matrix& check(const Matrix& a, const Matrix& b) {
    require_spd(a, "covariance A");
    require_spd(b, "covariance B");
    if (a.rows() != b.rows()) throw InvalidParameter("covariances A and B differ in dimension");
    return a;
  }

  Matrix sandwich(const Matrix& inner) const { return symmetrize(a_inv_half * inner * a_inv_half); }
};

inline double clamp0(double l) { return l > 0.0 ? l : 0.0; }

// (l + eta)^{1/2} - eta^{1/2}
inline double shifted_root_minus_floor(double l, double eta) {
  l = clamp0(l);
  return l / (std::sqrt(l + eta) + std::sqrt(eta));
}

// (l + eta)^{1/2} - l^{1/2}
inline double shifted_root_minus_root(double l, double eta) {
  l = clamp0(l);
  const double s = std::sqrt(l + eta) + std::sqrt(l);
  return s > 0.0 ? eta / s : 0.0;
}

}  // namespace detail

/// C_0 = A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}.
inline CoeffMatrix brenier_coeff(const Matrix& a, const Matrix& b) {
  const detail::Factors fx(a, b);
  return {fx.sandwich(fx.m_eig.apply([](double l) { return std::sqrt(detail::clamp0(l)); })),
          CoeffKind::brenier, 0.0};
}

/// C_eps = A^{-1/2} [A^{1/2} B A^{1/2} + (eps^2/4) I]^{1/2} A^{-1/2} - (eps/2) A^{-1}.
/// At eps = 0 this is the Brenier coefficient.
inline CoeffMatrix entropic_coeff(const Matrix& a, const Matrix& b, double eps) {
  detail::require_epsilon(eps);
  const detail::Factors fx(a, b);
  const double eta = eps * eps / 4.0;
  return {fx.sandwich(fx.m_eig.apply([eta](double l) { return detail::shifted_root_minus_floor(l, eta); })),
          CoeffKind::entropic, eps};
}

/// C_eps^{AA} = A^{-1/2} (A^2 + (eps^2/4) I)^{1/2} A^{-1/2} - (eps/2) A^{-1},
/// computed on the spectrum of A: l -> (sqrt(l^2 + eps^2/4) - eps/2) / l.
inline CoeffMatrix self_coeff(const Matrix& a, double eps) {
  detail::require_epsilon(eps);
  require_spd(a, "covariance A");
  const SymmetricEigen eig(a);
  const double eta = eps * eps / 4.0;
  return {eig.apply([eta](double l) { return detail::shifted_root_minus_floor(l * l, eta) / l; }),
          CoeffKind::self, eps};
}

/// C~_eps = C_eps^{AB} + I - C_eps^{AA}.
inline CoeffMatrix debiased_coeff(const Matrix& a, const Matrix& b, double eps) {
  const Matrix c_ab = entropic_coeff(a, b, eps).value;
  const Matrix c_aa = self_coeff(a, eps).value;
  return {c_ab + Matrix::Identity(a.rows(), a.cols()) - c_aa, CoeffKind::debiased, eps};
}

/// ||T_eps - T_0||^2_{L2(P)} = Tr(D^2 A), D = C_eps - C_0.
inline double exact_mse_biased(const Matrix& a, const Matrix& b, double eps) {
  detail::require_epsilon(eps);
  const detail::Factors fx(a, b);
  const double eta = eps * eps / 4.0;
  // D = A^{-1/2} [(M + eta)^{1/2} - M^{1/2}] A^{-1/2} - (eps/2) A^{-1}
  const Matrix m_eps = fx.m_eig.apply([eta](double l) { return detail::shifted_root_minus_root(l, eta); });
  const Matrix d = fx.sandwich(m_eps) - 0.5 * eps * fx.a_inv;
  return (d * d * a).trace();
}

/// ||T^D_eps - T_0||^2_{L2(P)} = Tr(D~^2 A), D~ = A^{-1/2} (M_eps - A_eps) A^{-1/2}
/// with M_eps = (M + eta)^{1/2} - M^{1/2} and A_eps = (A^2 + eta)^{1/2} - A.
inline double exact_mse_debiased(const Matrix& a, const Matrix& b, double eps) {
  detail::require_epsilon(eps);
  const detail::Factors fx(a, b);
  const double eta = eps * eps / 4.0;
  const Matrix m_eps = fx.m_eig.apply([eta](double l) { return detail::shifted_root_minus_root(l, eta); });
  const Matrix a_eps = fx.a_eig.apply([eta](double l) { return detail::shifted_root_minus_root(l * l, eta); });
  const Matrix d = fx.sandwich(m_eps - a_eps);
  return (d * d * a).trace();
}

struct LimitMses {
  double biased;    ///< Var(Q) = Tr(B)
  double debiased;  ///< Bures^2 between the centered Gaussians
};

/// eps -> infinity limits of the two MSEs.
inline LimitMses limit_mses(const Matrix& a, const Matrix& b, const Vector& mean = Vector()) {
  const detail::Factors fx(a, b);
  if (mean.size() != 0 && mean.size() != a.rows()) throw InvalidParameter("limit_mses: mean dimension mismatch");
  const double root_trace = fx.m_eig.values.unaryExpr([](double l) { return std::sqrt(detail::clamp0(l)); }).sum();
  return {b.trace(), a.trace() + b.trace() - 2.0 * root_trace};
}

/// Squared Bures-Wasserstein distance Tr(A + B - 2 (A^{1/2} B A^{1/2})^{1/2}).
inline double bures_squared(const Matrix& a, const Matrix& b) { return limit_mses(a, b).debiased; }

struct CounterexampleMses {
  double biased;
  double debiased;
  double ratio() const { return debiased / biased; }
};

/// One-dimensional pair P = N(0, 1), Q = N(0, sigma^2) with sigma = eps^m:
///   R(T_eps)   = ((eps^{2m} + eps^2/4)^{1/2} - eps/2 - eps^m)^2
///   R(T^D_eps) = ((eps^{2m} + eps^2/4)^{1/2} + 1 - eps^m - (1 + eps^2/4)^{1/2})^2
/// Requires 0 < eps < 1 and m > 0.
inline CounterexampleMses counterexample_mses(double eps, double m) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("counterexample_mses: need 0 < eps < 1");
  if (!(m > 0.0)) throw InvalidArgument("counterexample_mses: need m > 0");
  const double sigma = std::pow(eps, m);
  const double eta = eps * eps / 4.0;
  // (sigma^2 + eta)^{1/2} - eps/2, without cancellation
  const double entropic = detail::shifted_root_minus_floor(sigma * sigma, eta);
  // 1 - ((1 + eta)^{1/2} - eps/2)
  const double self_gap = 1.0 - detail::shifted_root_minus_floor(1.0, eta);
  const double biased = entropic - sigma;
  const double debiased = entropic + self_gap - sigma;
  return {biased * biased, debiased * debiased};
}

/// Fisher information of N(0, A): Tr(A^{-1}).
inline double fisher_info_gaussian(const Matrix& a) {
  return spd_power(a, -1.0, "fisher_info_gaussian").trace();
}

struct BoundCheck {
  double lhs;
  double rhs;
  bool holds() const { return lhs <= rhs; }
};

/// ||grad alpha_eps||^2_{L2(P)} = Tr((I - C^{AA}_eps)^2 A) against
/// (eps^2/4) Tr(A^{-1}).
inline BoundCheck grad_alpha_bound_check(const Matrix& a, double eps) {
  detail::require_epsilon(eps);
  require_spd(a, "covariance A");
  const SymmetricEigen eig(a);
  const double eta = eps * eps / 4.0;
  // I - C^{AA} on the spectrum: (l + eps/2 - sqrt(l^2 + eta)) / l
  const Matrix gap = eig.apply([eta](double l) {
    return (std::sqrt(eta) - detail::shifted_root_minus_root(l * l, eta)) / l;
  });
  return {(gap * gap * a).trace(), eta * fisher_info_gaussian(a)};
}

struct ExpansionCheck {
  double remainder_norm;
  double bound;
  bool bound_applies;  ///< eps^2/4 <= lambda_min(C) / 2
};

/// Remainder of the second-order expansion
///   (C + (eps^2/4) I)^{1/2} = C^{1/2} + (eps^2/8) C^{-1/2} - (eps^4/128) C^{-3/2} + R_eps
/// in operator norm, against lambda_min(C)^{-5/2} eps^6.
inline ExpansionCheck sqrt_expansion_check(const Matrix& c, double eps) {
  detail::require_epsilon(eps);
  require_spd(c, "sqrt_expansion_check");
  const SymmetricEigen eig(c);
  const double lmin = eig.min();
  const double eta = eps * eps / 4.0;
  if (!(eta < lmin))
    throw InvalidArgument("sqrt_expansion_check: eps^2/4 must be below lambda_min(C)");
  const Index d = c.rows();
  const Matrix shifted = sqrtm_psd(c + eta * Matrix::Identity(d, d));
  const Matrix root = eig.apply([](double l) { return std::sqrt(l); });
  const Matrix inv_root = eig.apply([](double l) { return 1.0 / std::sqrt(l); });
  const Matrix inv_root3 = eig.apply([](double l) { return std::pow(l, -1.5); });
  const Matrix rem = shifted - root - (eps * eps / 8.0) * inv_root + (std::pow(eps, 4) / 128.0) * inv_root3;
  return {spectral_norm_symmetric(rem), std::pow(lmin, -2.5) * std::pow(eps, 6), eta <= lmin / 2.0};
}

// ---------------------------------------------------------------------------
// Population maps on point clouds.

inline PointCloud apply_affine(const GaussianPair& pair, const Matrix& coeff, const PointCloud& q) {
  if (q.dim() != pair.dim()) throw InvalidArgument("GaussianPair: query dimension mismatch");
  Matrix centered = q.points().rowwise() - pair.source_mean.transpose();
  Matrix out = centered * coeff.transpose();
  out.rowwise() += pair.b.transpose();
  return PointCloud(std::move(out));
}

inline PointCloud brenier_map(const GaussianPair& pair, const PointCloud& q) {
  return apply_affine(pair, brenier_coeff(pair.a, pair.b_cov).value, q);
}

inline PointCloud entropic_map(const GaussianPair& pair, double eps, const PointCloud& q) {
  return apply_affine(pair, entropic_coeff(pair.a, pair.b_cov, eps).value, q);
}

inline PointCloud debiased_map(const GaussianPair& pair, double eps, const PointCloud& q) {
  return apply_affine(pair, debiased_coeff(pair.a, pair.b_cov, eps).value, q);
}

}  // namespace entromap::gaussian
