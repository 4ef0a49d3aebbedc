// entromap command-line tool.
//
//   entromap solve      SOURCE TARGET --epsilon E [--out potentials.json]
//   entromap map        POTENTIALS QUERIES [--debiased] [--out mapped.txt]
//   entromap experiment [--preset NAME] [--config FILE] [flags] --out DIR
//   entromap sample     --law uniform|gaussian --n N --dim D --out FILE
//
// Exit codes: 0 success, 1 usage or input error, 2 solver non-convergence.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "entromap/entromap.hpp"

namespace fs = std::filesystem;
namespace ex = entromap::experiments;
using namespace entromap;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;

int configure_threads(int flag) {
  const int n = flag > 0 ? flag : threads_from_env();
  set_threads(n);
  return current_threads();
}

struct SolveArgs {
  std::string source;
  std::string target;
  double epsilon = 0.0;
  double tol = SolverConfig{}.tol;
  std::size_t max_iter = SolverConfig{}.max_iter;
  std::string out = "potentials.json";
  int threads = 0;
};

int cmd_solve(const SolveArgs& a) {
  configure_threads(a.threads);
  const PointCloud x = io::read_point_cloud(a.source);
  const PointCloud y = io::read_point_cloud(a.target);
  if (x.dim() != y.dim())
    throw io::InputError(a.source + " and " + a.target + " have different dimensions (" + std::to_string(x.dim()) +
                         " vs " + std::to_string(y.dim()) + ")");
  const SolverConfig cfg{a.epsilon, a.tol, a.max_iter};
  cfg.validate();
  const DivergenceResult div = sinkhorn_divergence_detailed(x, y, cfg);
  const io::FittedModel model = io::make_model(x, y, cfg, div);
  io::write_model(a.out, model);

  std::cout << "entropic_cost " << ex::format_double(model.entropic_cost) << '\n'
            << "sinkhorn_divergence " << ex::format_double(model.sinkhorn_divergence) << '\n'
            << "marginal_residual " << ex::format_double(model.marginal_residual) << '\n'
            << "iterations " << model.iterations << '\n'
            << "converged " << (model.converged ? "true" : "false") << '\n';
  if (!model.converged) {
    std::cerr << "warning: solver did not reach tol " << a.tol << " within " << a.max_iter
              << " iterations; results written to " << a.out << '\n';
    return kNotConverged;
  }
  return kOk;
}

struct MapArgs {
  std::string potentials;
  std::string queries;
  std::string out;
  std::optional<double> epsilon;
  bool debiased = false;
  int threads = 0;
};

int cmd_map(const MapArgs& a) {
  configure_threads(a.threads);
  const io::FittedModel m = io::read_model(a.potentials);
  if (a.epsilon && *a.epsilon != m.epsilon) {
    std::cerr << "error: --epsilon " << *a.epsilon << " does not match epsilon " << m.epsilon << " in "
              << a.potentials << '\n';
    return kInputError;
  }
  const PointCloud q = io::read_point_cloud(a.queries);
  const EntropicMap ent(PointCloud(m.target), m.g, m.epsilon);
  if (q.dim() != ent.target().dim())
    throw io::InputError(a.queries + ": query dimension " + std::to_string(q.dim()) + " does not match potentials (" +
                         std::to_string(ent.target().dim()) + ")");
  const PointCloud out = a.debiased ? DebiasedMap(ent, PointCloud(m.source), m.alpha)(q) : ent(q);
  if (a.out.empty() || a.out == "-")
    io::write_point_cloud(std::cout, out);
  else
    io::write_point_cloud(a.out, out);
  return kOk;
}

struct SampleArgs {
  std::string law = "uniform";
  Index n = 100;
  Index dim = 2;
  Seed seed = 0;
  std::string out;
};

int cmd_sample(const SampleArgs& a) {
  PointCloud c = a.law == "gaussian" ? sample_gaussian(GaussianParams::standard(a.dim), a.n, a.seed)
                                     : sample_uniform_cube(a.n, a.dim, a.seed);
  if (a.out.empty() || a.out == "-")
    io::write_point_cloud(std::cout, c);
  else
    io::write_point_cloud(a.out, c);
  return kOk;
}

struct ExperimentArgs {
  std::string preset;
  std::string config;
  std::string out = "results";
  int threads = 0;
  bool timings = false;
  // Explicit overrides; applied only when given on the command line.
  std::string kind;
  std::string example;
  Index dim = 0;
  std::vector<double> epsilons;
  std::vector<Index> sizes;
  std::size_t trials = 0;
  Index mc_points = 0;
  Seed seed = 0;
  double tol = 0.0;
  std::size_t max_iter = 0;
  double gamma = 0.0;
};

std::string cell_summary(const ex::ExperimentRecord& r) {
  std::ostringstream os;
  os << ex::to_string(r.kind) << ' ' << r.example << " d=" << r.d << " eps=" << ex::format_double(r.epsilon)
     << " n=" << (r.n ? std::to_string(*r.n) : "inf") << ' ' << r.estimator
     << " mse=" << ex::format_double(r.mse);
  if (r.std) os << " std=" << ex::format_double(*r.std);
  if (!r.converged) os << " (not converged)";
  return os.str();
}

int cmd_experiment(const ExperimentArgs& a, const std::map<std::string, bool>& given) {
  const auto t0 = std::chrono::steady_clock::now();
  const int threads = configure_threads(a.threads);

  ex::ExperimentConfig cfg;
  std::vector<std::string> problems;
  if (!a.preset.empty()) {
    auto p = ex::preset(a.preset);
    if (!p) {
      std::string names;
      for (const auto& n : ex::preset_names()) names += " " + n;
      std::cerr << "error: unknown preset '" << a.preset << "'; available:" << names << '\n';
      return kInputError;
    }
    cfg = *p;
  }
  if (!a.config.empty()) {
    auto file_problems = io::apply_config_file(a.config, cfg);
    problems.insert(problems.end(), file_problems.begin(), file_problems.end());
  }
  auto has = [&](const char* k) { return given.at(k); };
  if (has("kind")) {
    if (auto k = ex::parse_kind(a.kind))
      cfg.kind = *k;
    else
      problems.push_back("--kind: '" + a.kind + "' is not one of synthetic, gaussian-sweep, closed-form");
  }
  if (has("example")) cfg.example = a.example;
  if (has("dim")) cfg.dim = a.dim;
  if (has("epsilon")) cfg.epsilons = a.epsilons;
  if (has("n")) cfg.sizes = a.sizes;
  if (has("trials")) cfg.trials = a.trials;
  if (has("mc-points")) cfg.mc_points = a.mc_points;
  if (has("seed")) cfg.seed = a.seed;
  if (has("tol")) cfg.tol = a.tol;
  if (has("max-iter")) cfg.max_iter = a.max_iter;
  if (has("gamma")) cfg.gamma = a.gamma;
  cfg.record_runtime = a.timings;

  for (auto& p : cfg.problems()) problems.push_back(std::move(p));
  if (!problems.empty()) {
    std::cerr << "error: invalid experiment configuration:\n";
    for (const auto& p : problems) std::cerr << "  " << p << '\n';
    return kInputError;
  }

  const auto records = ex::run_experiment(cfg);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw io::InputError(a.out + ": cannot create output directory: " + ec.message());
  const fs::path csv_path = fs::path(a.out) / "results.csv";
  {
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw io::InputError(csv_path.string() + ": cannot open file for writing");
    ex::write_csv(csv, records);
  }
  bool all_converged = true;
  for (const auto& r : records) {
    all_converged = all_converged && r.converged;
    // One line per cell: aggregates for sampled cells, the value itself for exact ones.
    if (r.is_aggregate() || !r.n) std::cout << cell_summary(r) << '\n';
  }
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ofstream man(fs::path(a.out) / "manifest.json");
    man << io::manifest(cfg, wall_ms, records.size(), threads).dump(2) << '\n';
  }
  std::cout << "wrote " << records.size() << " records to " << csv_path.string() << '\n';
  if (!all_converged) {
    std::cerr << "warning: some cells did not converge (converged=false in the CSV)\n";
    return kNotConverged;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic optimal transport map estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Fit dual and self potentials between two point clouds");
  s->add_option("source", solve.source, "Source point-cloud file")->required();
  s->add_option("target", solve.target, "Target point-cloud file")->required();
  s->add_option("--epsilon", solve.epsilon, "Regularization strength")->required();
  s->add_option("--tol", solve.tol, "Marginal residual tolerance")->capture_default_str();
  s->add_option("--max-iter", solve.max_iter, "Iteration budget")->capture_default_str();
  s->add_option("--out", solve.out, "Output JSON")->capture_default_str();
  s->add_option("--threads", solve.threads, "Worker threads (default: ENTROMAP_THREADS or all cores)");

  MapArgs map;
  double map_eps = 0.0;
  auto* m = app.add_subcommand("map", "Evaluate a fitted map on query points");
  m->add_option("potentials", map.potentials, "Potentials JSON written by solve")->required();
  m->add_option("queries", map.queries, "Query point-cloud file")->required();
  auto* map_eps_opt = m->add_option("--epsilon", map_eps, "Expected epsilon; must match the potentials file");
  m->add_flag("--debiased", map.debiased, "Use the debiased (Sinkhorn) map");
  m->add_option("--out", map.out, "Output file (default: stdout)");
  m->add_option("--threads", map.threads, "Worker threads");

  SampleArgs sample;
  auto* sm = app.add_subcommand("sample", "Draw a point cloud");
  sm->add_option("--law", sample.law, "uniform (on [-1,1]^d) or gaussian (standard)")
      ->check(CLI::IsMember({"uniform", "gaussian"}))
      ->capture_default_str();
  sm->add_option("--n", sample.n, "Number of points")->check(CLI::PositiveNumber)->capture_default_str();
  sm->add_option("--dim", sample.dim, "Dimension")->check(CLI::PositiveNumber)->capture_default_str();
  sm->add_option("--seed", sample.seed, "Seed")->capture_default_str();
  sm->add_option("--out", sample.out, "Output file (default: stdout)");

  ExperimentArgs exp;
  auto* e = app.add_subcommand("experiment", "Run a benchmark sweep and write results.csv + manifest.json");
  e->add_option("--preset", exp.preset, "Bundled configuration");
  e->add_option("--config", exp.config, "Config file ([experiment] and [solver] sections)");
  e->add_option("--out", exp.out, "Output directory")->capture_default_str();
  e->add_option("--threads", exp.threads, "Worker threads");
  e->add_flag("--timings", exp.timings, "Fill runtime_ms (output is then not reproducible byte for byte)");
  std::map<std::string, CLI::Option*> overrides;
  overrides["kind"] = e->add_option("--kind", exp.kind, "synthetic | gaussian-sweep | closed-form");
  overrides["example"] = e->add_option("--example", exp.example, "Example tag (E1, E2, E2p, E3, E4, concentrated, ...)");
  overrides["dim"] = e->add_option("--dim", exp.dim, "Dimension");
  overrides["epsilon"] = e->add_option("--epsilon", exp.epsilons, "Epsilon grid (comma separated)")->delimiter(',');
  overrides["n"] = e->add_option("--n", exp.sizes, "Training sizes (comma separated)")->delimiter(',');
  overrides["trials"] = e->add_option("--trials", exp.trials, "Trials per cell");
  overrides["mc-points"] = e->add_option("--mc-points", exp.mc_points, "Monte-Carlo evaluation points");
  overrides["seed"] = e->add_option("--seed", exp.seed, "Base seed");
  overrides["tol"] = e->add_option("--tol", exp.tol, "Solver tolerance");
  overrides["max-iter"] = e->add_option("--max-iter", exp.max_iter, "Solver iteration budget");
  overrides["gamma"] = e->add_option("--gamma", exp.gamma, "Trace of the random covariances");
  e->add_flag_callback("--list-presets", [] {
    for (const auto& n : ex::preset_names()) std::cout << n << '\n';
    throw CLI::Success();
  }, "Print preset names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (s->parsed()) return cmd_solve(solve);
    if (m->parsed()) {
      if (map_eps_opt->count() > 0) map.epsilon = map_eps;
      return cmd_map(map);
    }
    if (sm->parsed()) return cmd_sample(sample);
    if (e->parsed()) {
      std::map<std::string, bool> given;
      for (const auto& [k, opt] : overrides) given[k] = opt->count() > 0;
      return cmd_experiment(exp, given);
    }
  } catch (const io::InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInputError;
  } catch (const InvalidArgument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInputError;
  } catch (const NumericalError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
