#pragma once

// Finite-sample Entropic and Sinkhorn (debiased) map estimators, the
// ground-truth Monge maps of the benchmark suite, and Monte-Carlo MSE.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>
#include <utility>
#include <variant>

#include "entromap/errors.hpp"
#include "entromap/linalg.hpp"
#include "entromap/point_cloud.hpp"
#include "entromap/sinkhorn.hpp"

namespace entromap {

/// x -> sum_j y_j w_j(x), w_j(x) proportional to exp((g_j - c(x, y_j)) / eps).
/// Outputs always lie in the convex hull of the target cloud.
class EntropicMap {
 public:
  EntropicMap(PointCloud target, Vector g, double epsilon)
      : target_(std::move(target)), g_(std::move(g)), epsilon_(epsilon) {
    if (g_.size() != target_.size()) throw InvalidArgument("EntropicMap: potential size mismatch");
    if (!(epsilon_ > 0.0)) throw InvalidArgument("EntropicMap: epsilon must be > 0");
    if (!g_.allFinite()) throw InvalidArgument("EntropicMap: potential must be finite");
  }

  PointCloud operator()(const PointCloud& queries) const {
    require_same_dim(queries, target_, "EntropicMap");
    return PointCloud(GibbsKernel(queries, target_, epsilon_).barycenters(g_));
  }

  /// Softmax weights over the target points for one query.
  Vector weights(const Eigen::RowVectorXd& x) const {
    const PointCloud q{Matrix(x)};
    require_same_dim(q, target_, "EntropicMap::weights");
    return GibbsKernel(q, target_, epsilon_).weights(g_, 0);
  }

  const PointCloud& target() const { return target_; }
  const Vector& potential() const { return g_; }
  double epsilon() const { return epsilon_; }

 private:
  PointCloud target_;
  Vector g_;
  double epsilon_;
};

/// x -> T_eps(x) + x - sum_i x_i v_i(x), v_i(x) proportional to
/// exp((alpha_i - c(x, x_i)) / eps): the entropic map plus the barycentric
/// form of the self-potential gradient.
class DebiasedMap {
 public:
  DebiasedMap(EntropicMap entropic, PointCloud source, Vector alpha)
      : entropic_(std::move(entropic)), source_(std::move(source)), alpha_(std::move(alpha)) {
    if (alpha_.size() != source_.size()) throw InvalidArgument("DebiasedMap: potential size mismatch");
    require_same_dim(source_, entropic_.target(), "DebiasedMap");
    if (!alpha_.allFinite()) throw InvalidArgument("DebiasedMap: potential must be finite");
  }

  PointCloud operator()(const PointCloud& queries) const {
    return from_entropic(queries, entropic_(queries));
  }

  /// Same as operator() when `entropic_values` is entropic()(queries).
  PointCloud from_entropic(const PointCloud& queries, const PointCloud& entropic_values) const {
    require_same_dim(queries, source_, "DebiasedMap");
    const Matrix self_bary = GibbsKernel(queries, source_, epsilon()).barycenters(alpha_);
    return PointCloud(entropic_values.points() + queries.points() - self_bary);
  }

  const EntropicMap& entropic() const { return entropic_; }
  const PointCloud& source() const { return source_; }
  const Vector& self_potential() const { return alpha_; }
  double epsilon() const { return entropic_.epsilon(); }

 private:
  EntropicMap entropic_;
  PointCloud source_;
  Vector alpha_;
};

inline PointCloud eval_entropic_map(const EntropicMap& est, const PointCloud& queries) {
  return est(queries);
}

inline PointCloud eval_debiased_map(const DebiasedMap& est, const PointCloud& queries) {
  return est(queries);
}

/// Both estimators fitted on one (source, target) sample pair.
struct FittedMaps {
  DualPotentials potentials;
  SelfPotential self;
  EntropicMap entropic;
  DebiasedMap debiased;

  bool converged() const { return potentials.converged && self.converged; }
};

inline FittedMaps fit_maps(const PointCloud& source, const PointCloud& target, const SolverConfig& config) {
  DualPotentials pot = solve_sinkhorn(source, target, config);
  SelfPotential self = solve_symmetric(source, config);
  EntropicMap ent(target, pot.g, config.epsilon);
  DebiasedMap deb(ent, source, self.alpha);
  return FittedMaps{std::move(pot), std::move(self), std::move(ent), std::move(deb)};
}

// ---------------------------------------------------------------------------
// Ground-truth maps.

namespace truth {

/// E1: diagonal Omega_d with (Omega_d)_ii = 0.8 - 0.4 (i - 1) / (d - 1).
struct DiagonalScaling {
  Vector diagonal;
};
/// E2: x + 2 e_1 sign(x_1), sign(0) = 0.
struct SignShift {};
/// E2': x + 2 e_1 (2 / (1 + exp(-beta x_1)) - 1).
struct SmoothSignShift {
  double beta = 50.0;
};
/// E4: coordinate-wise exp.
struct CoordinateExp {};
/// x -> M x + shift. Covers E3, Gaussian Brenier maps and custom linear maps.
struct Affine {
  Matrix matrix;
  Vector shift;
  std::string label;
};

}  // namespace truth

class GroundTruthMap {
 public:
  using Variant = std::variant<truth::DiagonalScaling, truth::SignShift, truth::SmoothSignShift,
                               truth::CoordinateExp, truth::Affine>;

  static GroundTruthMap e1(Index d) {
    if (d < 2) throw InvalidArgument("E1 map needs d >= 2");
    Vector diag(d);
    for (Index i = 0; i < d; ++i)
      diag(i) = 0.8 - (0.4 / static_cast<double>(d - 1)) * static_cast<double>(i);
    return GroundTruthMap(truth::DiagonalScaling{std::move(diag)}, "E1");
  }

  static GroundTruthMap e2() { return GroundTruthMap(truth::SignShift{}, "E2"); }

  static GroundTruthMap e2_smooth(double beta = 50.0) {
    if (!(beta > 0.0)) throw InvalidArgument("E2' map needs beta > 0");
    return GroundTruthMap(truth::SmoothSignShift{beta}, "E2p");
  }

  /// E3: A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}.
  static GroundTruthMap e3(const Matrix& a, const Matrix& b) {
    require_spd(a, "E3 source covariance");
    require_spd(b, "E3 target covariance");
    const Matrix a_half = spd_power(a, 0.5, "E3 source covariance");
    const Matrix a_inv_half = spd_power(a, -0.5, "E3 source covariance");
    const Matrix middle = sqrtm_psd(symmetrize(a_inv_half * b * a_inv_half));
    return GroundTruthMap(
        truth::Affine{symmetrize(a_half * middle * a_half), Vector::Zero(a.rows()), "E3"}, "E3");
  }

  static GroundTruthMap e4() { return GroundTruthMap(truth::CoordinateExp{}, "E4"); }

  /// Brenier map between N(0, A) and N(b, B):
  /// A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2} x + b.
  static GroundTruthMap gaussian(const Matrix& a, const Matrix& b, const Vector& shift) {
    require_spd(a, "Gaussian source covariance");
    require_spd(b, "Gaussian target covariance");
    if (shift.size() != a.rows()) throw InvalidArgument("Gaussian map: mean dimension mismatch");
    const Matrix a_half = spd_power(a, 0.5, "Gaussian source covariance");
    const Matrix a_inv_half = spd_power(a, -0.5, "Gaussian source covariance");
    const Matrix middle = sqrtm_psd(symmetrize(a_half * b * a_half));
    return GroundTruthMap(truth::Affine{symmetrize(a_inv_half * middle * a_inv_half), shift, "gaussian"},
                          "gaussian");
  }

  static GroundTruthMap linear(Matrix m, Vector shift) {
    if (m.rows() != m.cols() || shift.size() != m.rows())
      throw InvalidArgument("linear map: shape mismatch");
    return GroundTruthMap(truth::Affine{std::move(m), std::move(shift), "linear"}, "linear");
  }

  PointCloud operator()(const PointCloud& q) const {
    return std::visit([&](const auto& m) { return apply(m, q); }, map_);
  }

  const std::string& name() const { return name_; }
  const Variant& variant() const { return map_; }

 private:
  GroundTruthMap(Variant m, std::string name) : map_(std::move(m)), name_(std::move(name)) {}

  static PointCloud apply(const truth::DiagonalScaling& m, const PointCloud& q) {
    check_dim(q, m.diagonal.size());
    return PointCloud(q.points() * m.diagonal.asDiagonal());
  }
  static PointCloud apply(const truth::SignShift&, const PointCloud& q) {
    Matrix out = q.points();
    for (Index i = 0; i < out.rows(); ++i) {
      const double x1 = out(i, 0);
      out(i, 0) += 2.0 * static_cast<double>((x1 > 0.0) - (x1 < 0.0));
    }
    return PointCloud(std::move(out));
  }
  static PointCloud apply(const truth::SmoothSignShift& m, const PointCloud& q) {
    Matrix out = q.points();
    for (Index i = 0; i < out.rows(); ++i)
      out(i, 0) += 2.0 * (2.0 / (1.0 + std::exp(-m.beta * out(i, 0))) - 1.0);
    return PointCloud(std::move(out));
  }
  static PointCloud apply(const truth::CoordinateExp&, const PointCloud& q) {
    return PointCloud(q.points().array().exp().matrix());
  }
  static PointCloud apply(const truth::Affine& m, const PointCloud& q) {
    check_dim(q, m.matrix.rows());
    Matrix out = q.points() * m.matrix.transpose();
    out.rowwise() += m.shift.transpose();
    return PointCloud(std::move(out));
  }
  static void check_dim(const PointCloud& q, Index d) {
    if (q.dim() != d) throw InvalidArgument("GroundTruthMap: query dimension mismatch");
  }

  Variant map_;
  std::string name_;
};

inline PointCloud ground_truth_eval(const GroundTruthMap& map, const PointCloud& queries) {
  return map(queries);
}

// ---------------------------------------------------------------------------
// Monte-Carlo mean squared error.

template <class F>
concept MapEvaluator = requires(const F& f, const PointCloud& q) {
  { f(q) } -> std::convertible_to<PointCloud>;
};

/// (1/N) sum_j |estimator(x_j) - truth(x_j)|^2 over the rows of mc_cloud,
/// evaluated in chunks to bound memory.
template <MapEvaluator Estimator, MapEvaluator Truth>
double mse(const Estimator& estimator, const Truth& truth, const PointCloud& mc_cloud,
           Index chunk = 1 << 15) {
  const Index n = mc_cloud.size();
  double total = 0.0;
  for (Index start = 0; start < n; start += chunk) {
    const Index len = std::min(chunk, n - start);
    const PointCloud part(mc_cloud.points().middleRows(start, len));
    const PointCloud est = estimator(part);
    const PointCloud ref = truth(part);
    if (est.size() != len || ref.size() != len || est.dim() != ref.dim())
      throw InvalidArgument("mse: estimator and truth disagree on output shape");
    total += (est.points() - ref.points()).squaredNorm();
  }
  return total / static_cast<double>(n);
}

struct MsePair {
  double entropic;
  double debiased;
};

/// MSE of both estimators of one fit, sharing the entropic evaluation.
template <MapEvaluator Truth>
MsePair mse_pair(const DebiasedMap& debiased, const Truth& truth, const PointCloud& mc_cloud,
                 Index chunk = 1 << 15) {
  const Index n = mc_cloud.size();
  double total_e = 0.0;
  double total_d = 0.0;
  for (Index start = 0; start < n; start += chunk) {
    const Index len = std::min(chunk, n - start);
    const PointCloud part(mc_cloud.points().middleRows(start, len));
    const PointCloud ent = debiased.entropic()(part);
    const PointCloud deb = debiased.from_entropic(part, ent);
    const PointCloud ref = truth(part);
    total_e += (ent.points() - ref.points()).squaredNorm();
    total_d += (deb.points() - ref.points()).squaredNorm();
  }
  return {total_e / static_cast<double>(n), total_d / static_cast<double>(n)};
}

}  // namespace entromap
