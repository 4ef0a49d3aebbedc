#pragma once

// Benchmark sweeps: finite-sample map estimation on the synthetic examples,
// finite-sample Gaussian epsilon sweeps, and exact closed-form curves.
// Every random draw is seeded from (config.seed, trial, sample size, stream),
// so a run is fully determined by its config.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "entromap/errors.hpp"
#include "entromap/gaussian.hpp"
#include "entromap/maps.hpp"
#include "entromap/measures.hpp"
#include "entromap/rng.hpp"
#include "entromap/sinkhorn.hpp"

namespace entromap::experiments {

enum class Kind { synthetic, gaussian_sweep, closed_form };

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::synthetic: return "synthetic";
    case Kind::gaussian_sweep: return "gaussian_sweep";
    case Kind::closed_form: return "closed_form";
  }
  return "?";
}

inline std::optional<Kind> parse_kind(const std::string& s) {
  if (s == "synthetic") return Kind::synthetic;
  if (s == "gaussian-sweep" || s == "gaussian_sweep") return Kind::gaussian_sweep;
  if (s == "closed-form" || s == "closed_form") return Kind::closed_form;
  return std::nullopt;
}

/// Raised by ExperimentConfig::validate; carries every offending key.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : InvalidArgument(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid experiment configuration:";
    for (const auto& item : p) s += "\n  " + item;
    return s;
  }
  std::vector<std::string> problems_;
};

inline const std::array<const char*, 5> kSyntheticExamples = {"E1", "E2", "E2p", "E3", "E4"};
inline const std::array<const char*, 2> kSweepExamples = {"concentrated", "spread"};
inline const std::array<const char*, 4> kClosedFormExamples = {"stretch", "shrink", "concentrated",
                                                               "spread"};

struct ExperimentConfig {
  Kind kind = Kind::synthetic;
  /// synthetic: E1 | E2 | E2p | E3 | E4.
  /// gaussian_sweep: concentrated | spread (random target covariance).
  /// closed_form: stretch | shrink | concentrated | spread.
  std::string example = "E1";
  Index dim = 5;
  std::vector<double> epsilons{0.05};
  /// Training sample sizes; ignored by closed_form.
  std::vector<Index> sizes{100, 1000};
  std::size_t trials = 20;
  Index mc_points = 500'000;
  Seed seed = 0;
  /// Solver budget. The l1 marginal residual decays roughly like 1/k at
  /// small eps in high dimension, so the default is looser than SolverConfig's.
  double tol = 1e-4;
  std::size_t max_iter = 20'000;
  /// E2' smoothing sharpness.
  double smooth_beta = 50.0;
  /// Elliptical radius law parameter (E3).
  double elliptical_beta = kEllipticalBeta;
  Index calibration_points = kEllipticalCalibrationPoints;
  /// Trace of the random covariances; defaults to covariance_gamma(d, spread)
  /// for the Gaussian kinds and to d for E3.
  std::optional<double> gamma;
  /// Fill runtime_ms. Off by default because wall time breaks byte-identical output.
  bool record_runtime = false;

  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    auto listed = [&](const auto& names) {
      return std::any_of(names.begin(), names.end(), [&](const char* n) { return example == n; });
    };
    switch (kind) {
      case Kind::synthetic:
        if (!listed(kSyntheticExamples)) p.push_back("example: '" + example + "' is not one of E1, E2, E2p, E3, E4");
        if (example == "E1" && dim < 2) p.push_back("dim: E1 needs dim >= 2");
        break;
      case Kind::gaussian_sweep:
        if (!listed(kSweepExamples)) p.push_back("example: '" + example + "' is not one of concentrated, spread");
        break;
      case Kind::closed_form:
        if (!listed(kClosedFormExamples))
          p.push_back("example: '" + example + "' is not one of stretch, shrink, concentrated, spread");
        if ((example == "stretch" || example == "shrink") && dim != 2)
          p.push_back("dim: " + example + " is defined in dimension 2");
        break;
    }
    if (dim < 1) p.push_back("dim: must be >= 1");
    if (epsilons.empty()) p.push_back("epsilon: grid must be non-empty");
    for (double e : epsilons)
      if (!(e > 0.0) || !std::isfinite(e)) {
        p.push_back("epsilon: values must be finite and > 0");
        break;
      }
    if (kind != Kind::closed_form) {
      if (sizes.empty()) p.push_back("n: grid must be non-empty");
      for (Index n : sizes)
        if (n < 1) {
          p.push_back("n: sizes must be >= 1");
          break;
        }
      if (trials < 1) p.push_back("trials: must be >= 1");
      if (mc_points < 1) p.push_back("mc_points: must be >= 1");
      if (!(tol > 0.0)) p.push_back("tol: must be > 0");
      if (max_iter < 1) p.push_back("max_iter: must be >= 1");
    }
    if (!(smooth_beta > 0.0)) p.push_back("smooth_beta: must be > 0");
    if (!(elliptical_beta > 0.0)) p.push_back("elliptical_beta: must be > 0");
    if (calibration_points < 1) p.push_back("calibration_points: must be >= 1");
    if (gamma && !(*gamma > 0.0)) p.push_back("gamma: must be > 0");
    return p;
  }

  void validate() const {
    auto p = problems();
    if (!p.empty()) throw ConfigError(std::move(p));
  }

  SolverConfig solver(double eps) const { return SolverConfig{eps, tol, max_iter}; }
};

struct ExperimentRecord {
  Kind kind = Kind::synthetic;
  std::string example;
  /// biased | debiased | limit_biased | limit_debiased
  std::string estimator;
  Index d = 0;
  /// +infinity for the eps -> infinity limit rows.
  double epsilon = 0.0;
  /// nullopt encodes n = infinity (population / closed-form values).
  std::optional<Index> n;
  /// nullopt marks an aggregate row.
  std::optional<std::size_t> trial;
  double mse = 0.0;
  std::optional<double> std;
  std::optional<double> runtime_ms;
  Seed seed = 0;
  bool converged = true;

  bool is_aggregate() const { return !trial.has_value(); }
};

inline std::vector<double> logspace(double lo_exp, double hi_exp, std::size_t count) {
  std::vector<double> out;
  if (count == 1) return {std::pow(10.0, lo_exp)};
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(std::pow(10.0, lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) /
                                              static_cast<double>(count - 1)));
  return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

inline std::tuple<int, std::string, std::string, Index, double, Index, std::size_t> sort_key(
    const ExperimentRecord& r) {
  return {static_cast<int>(r.kind), r.example, r.estimator, r.d, r.epsilon,
          r.n.value_or(std::numeric_limits<Index>::max()),
          r.trial.value_or(std::numeric_limits<std::size_t>::max())};
}

// Fits both estimators on one sample pair and appends one record per
// (epsilon, estimator).
template <class Truth>
void fit_and_score(const ExperimentConfig& cfg, const PointCloud& source, const PointCloud& target,
                   const Truth& truth, const PointCloud& mc, std::size_t trial,
                   std::vector<ExperimentRecord>& out) {
  for (double eps : cfg.epsilons) {
    const SolverConfig sc = cfg.solver(eps);
    auto t0 = Clock::now();
    DualPotentials pot = solve_sinkhorn(source, target, sc);
    const double t_cross = ms_since(t0);
    t0 = Clock::now();
    SelfPotential self = solve_symmetric(source, sc);
    const double t_self = ms_since(t0);

    const DebiasedMap deb(EntropicMap(target, pot.g, eps), source, self.alpha);
    t0 = Clock::now();
    const MsePair scores = mse_pair(deb, truth, mc);
    const double t_eval = ms_since(t0);

    ExperimentRecord r;
    r.kind = cfg.kind;
    r.example = cfg.example;
    r.d = cfg.dim;
    r.epsilon = eps;
    r.n = source.size();
    r.trial = trial;
    r.seed = cfg.seed;

    r.estimator = "biased";
    r.mse = scores.entropic;
    r.converged = pot.converged;
    if (cfg.record_runtime) r.runtime_ms = t_cross + t_eval;
    out.push_back(r);

    r.estimator = "debiased";
    r.mse = scores.debiased;
    r.converged = pot.converged && self.converged;
    if (cfg.record_runtime) r.runtime_ms = t_cross + t_self + t_eval;
    out.push_back(r);
  }
}

}  // namespace detail

/// Sorts by (kind, example, estimator, d, epsilon, n, trial) with n = inf
/// and aggregate rows last.
inline void sort_canonical(std::vector<ExperimentRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return detail::sort_key(a) < detail::sort_key(b);
  });
}

/// Appends one aggregate row (mean, sample standard deviation) per cell of
/// per-trial rows. Single-value rows with n = inf are exact and not aggregated.
inline std::vector<ExperimentRecord> aggregate(std::vector<ExperimentRecord> records) {
  using Key = std::tuple<int, std::string, std::string, Index, double, Index>;
  std::map<Key, std::vector<const ExperimentRecord*>> cells;
  for (const auto& r : records) {
    if (r.is_aggregate() || !r.n) continue;
    cells[{static_cast<int>(r.kind), r.example, r.estimator, r.d, r.epsilon, *r.n}].push_back(&r);
  }
  std::vector<ExperimentRecord> extra;
  for (const auto& [key, rows] : cells) {
    const double count = static_cast<double>(rows.size());
    double mean = 0.0;
    for (const auto* r : rows) mean += r->mse;
    mean /= count;
    double ss = 0.0;
    for (const auto* r : rows) ss += (r->mse - mean) * (r->mse - mean);
    ExperimentRecord agg = *rows.front();
    agg.trial.reset();
    agg.mse = mean;
    agg.std = rows.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    agg.converged = std::all_of(rows.begin(), rows.end(), [](const auto* r) { return r->converged; });
    if (rows.front()->runtime_ms) {
      double t = 0.0;
      for (const auto* r : rows) t += r->runtime_ms.value_or(0.0);
      agg.runtime_ms = t / count;
    }
    extra.push_back(std::move(agg));
  }
  records.insert(records.end(), extra.begin(), extra.end());
  return records;
}

/// Finite-sample map estimation on E1, E2, E2', E3 or E4. Targets are the
/// pushforward of the source sample through the ground-truth map.
inline std::vector<ExperimentRecord> run_synthetic(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.kind != Kind::synthetic) throw InvalidArgument("run_synthetic: config kind is not synthetic");
  const Index d = cfg.dim;

  std::optional<GroundTruthMap> truth;
  Matrix cov_a;
  double radius_scale = 0.0;
  const bool elliptical = cfg.example == "E3";
  if (cfg.example == "E1") truth = GroundTruthMap::e1(d);
  if (cfg.example == "E2") truth = GroundTruthMap::e2();
  if (cfg.example == "E2p") truth = GroundTruthMap::e2_smooth(cfg.smooth_beta);
  if (cfg.example == "E4") truth = GroundTruthMap::e4();
  if (elliptical) {
    const double gamma = cfg.gamma.value_or(static_cast<double>(d));
    cov_a = random_covariance(d, gamma, kCovarianceAlphaRatio, derive_seed(cfg.seed, {stream::kCovariance, 0}));
    const Matrix cov_b =
        random_covariance(d, gamma, kCovarianceAlphaRatio, derive_seed(cfg.seed, {stream::kCovariance, 1}));
    truth = GroundTruthMap::e3(cov_a, cov_b);
    radius_scale = calibrate_elliptical_radius(d, cfg.elliptical_beta, cfg.calibration_points,
                                               derive_seed(cfg.seed, {stream::kCalibration}));
  }
  auto sample_source = [&](Index n, Seed s) {
    return elliptical ? sample_elliptical(cov_a, n, cfg.elliptical_beta, radius_scale, s)
                      : sample_uniform_cube(n, d, s);
  };

  std::vector<ExperimentRecord> out;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const PointCloud mc = sample_source(cfg.mc_points, derive_seed(cfg.seed, {t, stream::kEvaluation}));
    for (Index n : cfg.sizes) {
      const PointCloud x = sample_source(n, derive_seed(cfg.seed, {t, static_cast<std::uint64_t>(n), stream::kSource}));
      const PointCloud y = (*truth)(x);
      detail::fit_and_score(cfg, x, y, *truth, mc, t, out);
    }
  }
  out = aggregate(std::move(out));
  sort_canonical(out);
  return out;
}

/// Target covariance used by the Gaussian kinds.
inline Matrix sweep_target_covariance(const ExperimentConfig& cfg) {
  const auto spread = cfg.example == "spread" ? CovarianceSpread::spread : CovarianceSpread::concentrated;
  const double gamma = cfg.gamma.value_or(covariance_gamma(cfg.dim, spread));
  return random_covariance(cfg.dim, gamma, kCovarianceAlphaRatio,
                           derive_seed(cfg.seed, {stream::kTargetCovariance}));
}

/// Exact MSE rows (n = inf) for a Gaussian pair over the config's eps grid.
inline void append_exact_rows(const ExperimentConfig& cfg, const Matrix& a, const Matrix& b,
                              std::vector<ExperimentRecord>& out) {
  for (double eps : cfg.epsilons) {
    ExperimentRecord r;
    r.kind = cfg.kind;
    r.example = cfg.example;
    r.d = a.rows();
    r.epsilon = eps;
    r.trial = 0;
    r.seed = cfg.seed;
    r.estimator = "biased";
    r.mse = gaussian::exact_mse_biased(a, b, eps);
    out.push_back(r);
    r.estimator = "debiased";
    r.mse = gaussian::exact_mse_debiased(a, b, eps);
    out.push_back(r);
  }
}

/// P = N(0, I_d), Q = N(0, Sigma) with a random Sigma; finite-sample rows for
/// every (eps, N, trial) plus exact N = inf rows.
inline std::vector<ExperimentRecord> run_gaussian_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.kind != Kind::gaussian_sweep) throw InvalidArgument("run_gaussian_sweep: config kind mismatch");
  const Index d = cfg.dim;
  const Matrix identity = Matrix::Identity(d, d);
  const Matrix sigma = sweep_target_covariance(cfg);
  const GaussianParams source = GaussianParams::standard(d);
  const GaussianParams target(Vector::Zero(d), sigma);
  const GroundTruthMap truth = GroundTruthMap::gaussian(identity, sigma, Vector::Zero(d));

  std::vector<ExperimentRecord> out;
  append_exact_rows(cfg, identity, sigma, out);
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const PointCloud mc = sample_gaussian(source, cfg.mc_points, derive_seed(cfg.seed, {t, stream::kEvaluation}));
    for (Index n : cfg.sizes) {
      const auto nn = static_cast<std::uint64_t>(n);
      const PointCloud x = sample_gaussian(source, n, derive_seed(cfg.seed, {t, nn, stream::kSource}));
      const PointCloud y = sample_gaussian(target, n, derive_seed(cfg.seed, {t, nn, stream::kTarget}));
      detail::fit_and_score(cfg, x, y, truth, mc, t, out);
    }
  }
  out = aggregate(std::move(out));
  sort_canonical(out);
  return out;
}

/// The Gaussian pair a closed_form config refers to, with source N(0, I):
/// stretch targets N(0, diag(2, 1)), shrink targets N(0, 0.1 I), the other
/// two use the random sweep covariance.
inline std::pair<Matrix, Matrix> closed_form_pair(const ExperimentConfig& cfg) {
  if (cfg.example == "stretch") {
    Matrix b = Matrix::Zero(2, 2);
    b.diagonal() << 2.0, 1.0;
    return {Matrix::Identity(2, 2), b};
  }
  if (cfg.example == "shrink") return {Matrix::Identity(2, 2), 0.1 * Matrix::Identity(2, 2)};
  return {Matrix::Identity(cfg.dim, cfg.dim), sweep_target_covariance(cfg)};
}

/// Exact biased/debiased MSE over the eps grid plus the two eps -> infinity
/// limits (epsilon = inf, estimator limit_biased / limit_debiased).
inline std::vector<ExperimentRecord> run_closed_form(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.kind != Kind::closed_form) throw InvalidArgument("run_closed_form: config kind mismatch");
  const auto [a, b] = closed_form_pair(cfg);
  std::vector<ExperimentRecord> out;
  append_exact_rows(cfg, a, b, out);
  const auto lim = gaussian::limit_mses(a, b);
  ExperimentRecord r;
  r.kind = Kind::closed_form;
  r.example = cfg.example;
  r.d = a.rows();
  r.epsilon = std::numeric_limits<double>::infinity();
  r.trial = 0;
  r.seed = cfg.seed;
  r.estimator = "limit_biased";
  r.mse = lim.biased;
  out.push_back(r);
  r.estimator = "limit_debiased";
  r.mse = lim.debiased;
  out.push_back(r);
  sort_canonical(out);
  return out;
}

inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case Kind::synthetic: return run_synthetic(cfg);
    case Kind::gaussian_sweep: return run_gaussian_sweep(cfg);
    case Kind::closed_form: return run_closed_form(cfg);
  }
  throw InvalidArgument("run_experiment: unknown kind");
}

// ---------------------------------------------------------------------------
// CSV output.

inline constexpr const char* kCsvHeader = "kind,example,estimator,d,epsilon,n,trial,mse,std,runtime_ms,seed,converged";

/// Shortest round-trip decimal form; "inf" / "nan" for non-finite values.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string to_csv_row(const ExperimentRecord& r) {
  std::string s;
  s += to_string(r.kind);
  s += ',' + r.example + ',' + r.estimator + ',' + std::to_string(r.d) + ',' + format_double(r.epsilon) + ',';
  s += r.n ? std::to_string(*r.n) : "inf";
  s += ',';
  s += r.trial ? std::to_string(*r.trial) : "agg";
  s += ',' + format_double(r.mse) + ',';
  if (r.std) s += format_double(*r.std);
  s += ',';
  if (r.runtime_ms) s += format_double(*r.runtime_ms);
  s += ',' + std::to_string(r.seed) + ',' + (r.converged ? "true" : "false");
  return s;
}

inline void write_csv(std::ostream& os, const std::vector<ExperimentRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
}

// ---------------------------------------------------------------------------
// Presets.

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "stretch",         "shrink",           "e1-d5",  "e2-d5",  "e2p-d5",
      "e3-d5",           "e4-d5",            "e1-d10", "e2-d10", "e2p-d10",
      "e3-d10",          "e4-d10",           "sweep-concentrated-d2", "sweep-concentrated-d15",
      "sweep-spread-d2", "sweep-spread-d15"};
  return names;
}

/// Bundled configurations.
inline std::optional<ExperimentConfig> preset(const std::string& name) {
  ExperimentConfig c;
  const std::vector<Index> synthetic_sizes{100, 200, 500, 1000, 2000, 5000, 10000};
  auto synthetic = [&](const char* example, Index d) {
    c.kind = Kind::synthetic;
    c.example = example;
    c.dim = d;
    c.epsilons = {d == 5 ? 0.05 : 0.1};
    c.sizes = synthetic_sizes;
    c.trials = 20;
    return c;
  };
  auto sweep = [&](const char* example, Index d, std::vector<Index> sizes) {
    c.kind = Kind::gaussian_sweep;
    c.example = example;
    c.dim = d;
    c.epsilons = logspace(-2.0, 1.0, 13);
    c.sizes = std::move(sizes);
    c.trials = 15;
    return c;
  };
  if (name == "stretch" || name == "shrink") {
    c.kind = Kind::closed_form;
    c.example = name;
    c.dim = 2;
    c.epsilons = logspace(-2.0, 1.0, 31);
    return c;
  }
  if (name == "e1-d5") return synthetic("E1", 5);
  if (name == "e2-d5") return synthetic("E2", 5);
  if (name == "e2p-d5") return synthetic("E2p", 5);
  if (name == "e3-d5") return synthetic("E3", 5);
  if (name == "e4-d5") return synthetic("E4", 5);
  if (name == "e1-d10") return synthetic("E1", 10);
  if (name == "e2-d10") return synthetic("E2", 10);
  if (name == "e2p-d10") return synthetic("E2p", 10);
  if (name == "e3-d10") return synthetic("E3", 10);
  if (name == "e4-d10") return synthetic("E4", 10);
  if (name == "sweep-concentrated-d2") return sweep("concentrated", 2, {1000, 10000, 100000});
  if (name == "sweep-concentrated-d15") return sweep("concentrated", 15, {1000, 10000});
  if (name == "sweep-spread-d2") return sweep("spread", 2, {1000, 10000, 100000});
  if (name == "sweep-spread-d15") return sweep("spread", 15, {1000, 10000});
  return std::nullopt;
}

}  // namespace entromap::experiments
