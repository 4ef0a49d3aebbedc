#pragma once

// Log-domain Sinkhorn for the quadratic cost c(x, y) = |x - y|^2 / 2 between
// uniformly weighted point clouds.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "entromap/errors.hpp"
#include "entromap/parallel.hpp"
#include "entromap/point_cloud.hpp"

namespace entromap {

struct SolverConfig {
  double epsilon = 1.0;
  double tol = 1e-9;
  std::size_t max_iter = 100000;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw InvalidArgument("SolverConfig: epsilon must be a finite positive number");
    if (!(tol > 0.0)) throw InvalidArgument("SolverConfig: tol must be > 0");
    if (max_iter < 1) throw InvalidArgument("SolverConfig: max_iter must be >= 1");
  }
};

/// Discrete entropic dual potentials (f on the source, g on the target).
/// The implied plan is pi_ij = exp((f_i + g_j - C_ij) / eps) / (n m).
struct DualPotentials {
  Vector f;
  Vector g;
  double epsilon = 0.0;
  double marginal_residual = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
  /// Row-marginal l1 residual after every full iteration.
  std::vector<double> residual_history;
};

/// Self-potential alpha of OT_eps(P_n, P_n).
struct SelfPotential {
  Vector alpha;
  double epsilon = 0.0;
  /// max_i |alpha_i - softmin(alpha)_i| at the returned alpha.
  double residual = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

/// C_ij = |x_i - y_j|^2 / 2, evaluated directly.
inline Matrix cost_matrix(const PointCloud& x, const PointCloud& y) {
  require_same_dim(x, y, "cost_matrix");
  Matrix c(x.size(), y.size());
  for (Index j = 0; j < y.size(); ++j)
    for (Index i = 0; i < x.size(); ++i) c(i, j) = 0.5 * (x.point(i) - y.point(j)).squaredNorm();
  return c;
}

/// Row-wise Gibbs-kernel reductions between a set of row points and a set of
/// column points carrying a potential h. For each row point p_i it evaluates
/// the log-partition of the weights w_ij proportional to
/// exp((h_j - c(p_i, q_j)) / eps), and optionally the weighted mean of q_j.
///
/// The cost is expanded as |p|^2/2 + |q|^2/2 - <p, q> so that blocks of rows
/// reduce to one matrix product; exponentials are max-shifted per row.
class GibbsKernel {
 public:
  GibbsKernel(const PointCloud& rows, const PointCloud& cols, double epsilon)
      : rows_(rows.points()), cols_(cols.points()), epsilon_(epsilon) {
    require_same_dim(rows, cols, "GibbsKernel");
    if (!(epsilon > 0.0)) throw InvalidArgument("GibbsKernel: epsilon must be > 0");
    cols_scaled_ = cols_ / epsilon_;
    row_half_sq_ = 0.5 * rows_.rowwise().squaredNorm();
    col_half_sq_ = 0.5 * cols_.rowwise().squaredNorm();
  }

  Index rows() const { return rows_.rows(); }
  Index cols() const { return cols_.rows(); }
  double epsilon() const { return epsilon_; }

  /// out_i = -eps log( (1/m) sum_j exp((h_j - C_ij) / eps) ).
  void softmin(const Vector& h, Vector& out) const {
    check_potential(h);
    out.resize(rows());
    const double log_m = std::log(static_cast<double>(cols()));
    for_each_row(h, [&](Index i, const auto& shifted, double shift) {
      const double lse = shift + std::log(shifted.exp().sum());
      out(i) = -epsilon_ * (lse - log_m) + row_half_sq_(i);
    });
    if (!out.allFinite()) throw NumericalError("GibbsKernel::softmin produced non-finite values");
  }

  /// Row i: sum_j q_j w_ij with sum_j w_ij = 1.
  Matrix barycenters(const Vector& h) const {
    check_potential(h);
    Matrix out(rows(), cols_.cols());
    for_each_block(h, [&](Index start, Index len, Matrix& w) {
      Eigen::RowVectorXd mass(len);
      for (Index r = 0; r < len; ++r) {
        auto z = w.col(r).array();
        z = (z - z.maxCoeff()).exp();
        mass(r) = z.sum();
      }
      out.middleRows(start, len).noalias() = w.leftCols(len).transpose() * cols_;
      out.middleRows(start, len).array().colwise() /= mass.transpose().array();
    });
    if (!out.allFinite()) throw NumericalError("GibbsKernel::barycenters produced non-finite values");
    return out;
  }

  /// Normalized weights for a single row (for inspection and tests).
  Vector weights(const Vector& h, Index i) const {
    check_potential(h);
    Eigen::ArrayXd z = logits(h, i);
    z = (z - z.maxCoeff()).exp();
    return (z / z.sum()).matrix();
  }

 private:
  static constexpr Index kBlock = 32;

  void check_potential(const Vector& h) const {
    if (h.size() != cols()) throw InvalidArgument("GibbsKernel: potential size mismatch");
  }

  Eigen::ArrayXd logits(const Vector& h, Index i) const {
    return (h.array() - col_half_sq_.array()) / epsilon_ +
           (cols_scaled_ * rows_.row(i).transpose()).array();
  }

  // Calls fn(start, len, z) for every block of rows, where column r of z
  // holds z_ij = (h_j - |q_j|^2/2 + <p_i, q_j>) / eps for row i = start + r;
  // the |p_i|^2/2 term is left to fn. Blocks are independent, so the result
  // does not depend on the thread count.
  template <class Fn>
  void for_each_block(const Vector& h, Fn&& fn) const {
    const Eigen::ArrayXd base = (h.array() - col_half_sq_.array()) / epsilon_;
    const Index n = rows();
    const Index blocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel if (blocks > 1)
    {
      Matrix z(cols(), kBlock);
#pragma omp for schedule(static)
      for (Index b = 0; b < blocks; ++b) {
        const Index start = b * kBlock;
        const Index len = std::min(kBlock, n - start);
        z.leftCols(len).noalias() = cols_scaled_ * rows_.middleRows(start, len).transpose();
        z.leftCols(len).array().colwise() += base;
        fn(start, len, z);
      }
    }
  }

  // Calls fn(i, z_i - max(z_i), max(z_i)) for every row i.
  template <class Fn>
  void for_each_row(const Vector& h, Fn&& fn) const {
    for_each_block(h, [&](Index start, Index len, Matrix& z) {
      for (Index r = 0; r < len; ++r) {
        auto col = z.col(r).array();
        const double shift = col.maxCoeff();
        col -= shift;
        fn(start + r, col, shift);
      }
    });
  }

  Matrix rows_;
  Matrix cols_;
  Matrix cols_scaled_;
  Vector row_half_sq_;
  Vector col_half_sq_;
  double epsilon_;
};

namespace detail {

/// Moves potentials to the gauge sum(f) = sum(g) with a (kappa, -kappa) shift.
inline void fix_gauge(Vector& f, Vector& g) {
  const double kappa = (g.sum() - f.sum()) / static_cast<double>(f.size() + g.size());
  f.array() += kappa;
  g.array() -= kappa;
}

// l1 deviation of the row sums (1/n) exp((f_i - f_next_i) / eps) from 1/n.
inline double row_residual(const Vector& f, const Vector& f_next, double epsilon) {
  const double inv_n = 1.0 / static_cast<double>(f.size());
  double r = 0.0;
  for (Index i = 0; i < f.size(); ++i) r += std::abs(std::expm1((f(i) - f_next(i)) / epsilon));
  return r * inv_n;
}

}  // namespace detail

/// Alternating log-domain Sinkhorn updates from f = g = 0:
///   f_i <- -eps log((1/m) sum_j exp((g_j - C_ij)/eps)),
///   g_j <- -eps log((1/n) sum_i exp((f_i - C_ij)/eps)),
/// stopped once the l1 marginal residual of the implied plan is <= tol.
/// After a g-update the column marginal is exact, so the residual is the
/// row deviation, read off the next f-update for free.
/// Non-convergence is reported through `converged`, not thrown.
inline DualPotentials solve_sinkhorn(const PointCloud& x, const PointCloud& y,
                                     const SolverConfig& config) {
  config.validate();
  require_same_dim(x, y, "solve_sinkhorn");
  const GibbsKernel kxy(x, y, config.epsilon);
  const GibbsKernel kyx(y, x, config.epsilon);

  DualPotentials out;
  out.epsilon = config.epsilon;
  out.f = Vector::Zero(x.size());
  out.g = Vector::Zero(y.size());
  Vector f_next;
  std::size_t it = 0;
  for (; it < config.max_iter; ++it) {
    kxy.softmin(out.g, f_next);
    if (it > 0) {
      const double r = detail::row_residual(out.f, f_next, config.epsilon);
      out.residual_history.push_back(r);
      out.marginal_residual = r;
      if (r <= config.tol) {
        out.converged = true;
        break;
      }
    }
    out.f.swap(f_next);
    kyx.softmin(out.f, out.g);
  }
  if (!out.converged) {
    // Final state after max_iter full updates: measure its residual.
    kxy.softmin(out.g, f_next);
    out.marginal_residual = detail::row_residual(out.f, f_next, config.epsilon);
    out.converged = out.marginal_residual <= config.tol;
  }
  out.iterations = it;
  detail::fix_gauge(out.f, out.g);
  return out;
}

/// Averaged fixed-point iteration alpha <- (alpha + softmin(alpha)) / 2 from
/// alpha = 0, stopped when the largest update is <= tol.
inline SelfPotential solve_symmetric(const PointCloud& x, const SolverConfig& config) {
  config.validate();
  const GibbsKernel kxx(x, x, config.epsilon);
  SelfPotential out;
  out.epsilon = config.epsilon;
  out.alpha = Vector::Zero(x.size());
  Vector t;
  std::size_t it = 0;
  while (it < config.max_iter) {
    kxx.softmin(out.alpha, t);
    const Vector step = 0.5 * (t - out.alpha);
    out.alpha += step;
    ++it;
    if (step.cwiseAbs().maxCoeff() <= config.tol) {
      out.converged = true;
      break;
    }
  }
  kxx.softmin(out.alpha, t);
  out.residual = (t - out.alpha).cwiseAbs().maxCoeff();
  out.iterations = it;
  return out;
}

/// OT_eps(P_n, Q_n) = mean(f) + mean(g) at the optimum.
inline double entropic_cost(const DualPotentials& p) { return p.f.mean() + p.g.mean(); }

/// OT_eps(P_n, P_n) = 2 mean(alpha).
inline double entropic_cost(const SelfPotential& p) { return 2.0 * p.alpha.mean(); }

/// l1 deviation of the implied plan's row and column sums from the uniform
/// marginals 1/n and 1/m; the larger of the two.
inline double marginal_residual(const DualPotentials& p, const Matrix& c) {
  const Index n = p.f.size();
  const Index m = p.g.size();
  if (c.rows() != n || c.cols() != m) throw InvalidArgument("marginal_residual: shape mismatch");
  const double eps = p.epsilon;
  const double log_nm = std::log(static_cast<double>(n)) + std::log(static_cast<double>(m));
  // log pi_ij
  Matrix logp = (-c).rowwise() + p.g.transpose();
  logp.colwise() += p.f;
  logp = logp / eps;
  logp.array() -= log_nm;
  double rows = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double mx = logp.row(i).maxCoeff();
    const double s = std::exp(mx) * (logp.row(i).array() - mx).exp().sum();
    rows += std::abs(s - 1.0 / static_cast<double>(n));
  }
  double cols = 0.0;
  for (Index j = 0; j < m; ++j) {
    const double mx = logp.col(j).maxCoeff();
    const double s = std::exp(mx) * (logp.col(j).array() - mx).exp().sum();
    cols += std::abs(s - 1.0 / static_cast<double>(m));
  }
  return std::max(rows, cols);
}

/// The three solves behind a Sinkhorn divergence.
struct DivergenceResult {
  double value = 0.0;
  DualPotentials cross;
  SelfPotential source_self;
  SelfPotential target_self;

  bool converged() const { return cross.converged && source_self.converged && target_self.converged; }
};

/// S_eps = OT_eps(X, Y) - OT_eps(X, X)/2 - OT_eps(Y, Y)/2.
inline DivergenceResult sinkhorn_divergence_detailed(const PointCloud& x, const PointCloud& y,
                                                     const SolverConfig& config) {
  DivergenceResult r;
  r.cross = solve_sinkhorn(x, y, config);
  r.source_self = solve_symmetric(x, config);
  r.target_self = solve_symmetric(y, config);
  r.value = entropic_cost(r.cross) - 0.5 * entropic_cost(r.source_self) -
            0.5 * entropic_cost(r.target_self);
  return r;
}

inline double sinkhorn_divergence(const PointCloud& x, const PointCloud& y, const SolverConfig& config) {
  return sinkhorn_divergence_detailed(x, y, config).value;
}

}  // namespace entromap
