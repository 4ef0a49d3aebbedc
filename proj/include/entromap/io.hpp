#pragma once

// File formats: point clouds as plain numeric text, fitted potentials and run
// manifests as JSON, experiment configs as sectioned key/value text.

#include <Eigen/Dense>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "entromap/errors.hpp"
#include "entromap/experiments.hpp"
#include "entromap/point_cloud.hpp"
#include "entromap/sinkhorn.hpp"
#include "entromap/version.hpp"

namespace entromap::io {

/// Malformed or unreadable input; the message names the file and line.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !sep(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

/// One point per row; fields separated by whitespace and/or commas; text
/// after '#' is ignored; blank lines are skipped. `name` labels errors.
inline PointCloud parse_point_cloud(std::istream& in, const std::string& name) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  Index dim = 0;
  Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto fields = detail::split_fields(view);
    if (fields.empty()) continue;
    if (dim == 0) dim = static_cast<Index>(fields.size());
    if (static_cast<Index>(fields.size()) != dim)
      throw InputError(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                       " values, found " + std::to_string(fields.size()));
    for (auto tok : fields) {
      double v = 0.0;
      if (!detail::parse_double(tok, v) || !std::isfinite(v))
        throw InputError(name + ":" + std::to_string(line_no) + ": invalid number '" + std::string(tok) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw InputError(name + ": no points found");
  Matrix m(rows, dim);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < dim; ++k) m(i, k) = values[static_cast<std::size_t>(i * dim + k)];
  return PointCloud(std::move(m));
}

inline PointCloud read_point_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  return parse_point_cloud(in, path);
}

inline void write_point_cloud(std::ostream& os, const PointCloud& cloud) {
  for (Index i = 0; i < cloud.size(); ++i) {
    for (Index k = 0; k < cloud.dim(); ++k) {
      if (k) os << ' ';
      os << experiments::format_double(cloud.points()(i, k));
    }
    os << '\n';
  }
}

inline void write_point_cloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open file for writing");
  write_point_cloud(out, cloud);
}

// ---------------------------------------------------------------------------
// Fitted potentials.

/// Everything `map` needs to evaluate both estimators, plus the solve report.
struct FittedModel {
  double epsilon = 0.0;
  double tol = 0.0;
  Matrix source;
  Matrix target;
  Vector f;
  Vector g;
  Vector alpha;  ///< self-potential on the source
  Vector beta;   ///< self-potential on the target
  double entropic_cost = 0.0;
  double sinkhorn_divergence = 0.0;
  double marginal_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

inline FittedModel make_model(const PointCloud& x, const PointCloud& y, const SolverConfig& cfg,
                              const DivergenceResult& div) {
  FittedModel m;
  m.epsilon = cfg.epsilon;
  m.tol = cfg.tol;
  m.source = x.points();
  m.target = y.points();
  m.f = div.cross.f;
  m.g = div.cross.g;
  m.alpha = div.source_self.alpha;
  m.beta = div.target_self.alpha;
  m.entropic_cost = entropic_cost(div.cross);
  m.sinkhorn_divergence = div.value;
  m.marginal_residual = div.cross.marginal_residual;
  m.iterations = div.cross.iterations;
  m.converged = div.converged();
  return m;
}

namespace detail {

inline nlohmann::json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Vector vector_from(const nlohmann::json& j, const std::string& key) {
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline Matrix matrix_from(const nlohmann::json& j, const std::string& key) {
  const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw InputError("'" + key + "' is empty");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw InputError("'" + key + "' has ragged rows");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
  }
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const FittedModel& m) {
  return {{"format", "entromap-potentials"},
          {"version", kVersion},
          {"epsilon", m.epsilon},
          {"tol", m.tol},
          {"source", detail::to_json(m.source)},
          {"target", detail::to_json(m.target)},
          {"f", detail::to_json(m.f)},
          {"g", detail::to_json(m.g)},
          {"alpha", detail::to_json(m.alpha)},
          {"beta", detail::to_json(m.beta)},
          {"entropic_cost", m.entropic_cost},
          {"sinkhorn_divergence", m.sinkhorn_divergence},
          {"marginal_residual", m.marginal_residual},
          {"iterations", m.iterations},
          {"converged", m.converged}};
}

inline FittedModel model_from_json(const nlohmann::json& j) {
  FittedModel m;
  try {
    m.epsilon = j.at("epsilon").get<double>();
    m.tol = j.value("tol", 0.0);
    m.source = detail::matrix_from(j, "source");
    m.target = detail::matrix_from(j, "target");
    m.f = detail::vector_from(j, "f");
    m.g = detail::vector_from(j, "g");
    m.alpha = detail::vector_from(j, "alpha");
    m.beta = j.contains("beta") ? detail::vector_from(j, "beta") : Vector();
    m.entropic_cost = j.value("entropic_cost", 0.0);
    m.sinkhorn_divergence = j.value("sinkhorn_divergence", 0.0);
    m.marginal_residual = j.value("marginal_residual", 0.0);
    m.iterations = j.value("iterations", std::size_t{0});
    m.converged = j.value("converged", false);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("potentials file: ") + e.what());
  }
  if (m.g.size() != m.target.rows() || m.f.size() != m.source.rows() || m.alpha.size() != m.source.rows())
    throw InputError("potentials file: potential lengths do not match the point clouds");
  if (!(m.epsilon > 0.0)) throw InputError("potentials file: epsilon must be > 0");
  return m;
}

inline void write_model(const std::string& path, const FittedModel& m) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open file for writing");
  out << to_json(m).dump(2) << '\n';
}

inline FittedModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Run manifest.

inline nlohmann::json config_to_json(const experiments::ExperimentConfig& c) {
  nlohmann::json j = {{"kind", experiments::to_string(c.kind)},
                      {"example", c.example},
                      {"dim", c.dim},
                      {"epsilon", c.epsilons},
                      {"n", c.sizes},
                      {"trials", c.trials},
                      {"mc_points", c.mc_points},
                      {"seed", c.seed},
                      {"tol", c.tol},
                      {"max_iter", c.max_iter},
                      {"smooth_beta", c.smooth_beta},
                      {"elliptical_beta", c.elliptical_beta},
                      {"calibration_points", c.calibration_points}};
  if (c.gamma) j["gamma"] = *c.gamma;
  return j;
}

inline nlohmann::json manifest(const experiments::ExperimentConfig& c, double wall_ms, std::size_t records,
                               int threads) {
  return {{"library", "entromap"},
          {"version", kVersion},
          {"config", config_to_json(c)},
          {"records", records},
          {"threads", threads},
          {"wall_time_ms", wall_ms}};
}

// ---------------------------------------------------------------------------
// Experiment config files:
//
//   [experiment]
//   kind = synthetic
//   example = E1
//   epsilon = 0.05
//   n = 100, 1000
//   [solver]
//   tol = 1e-6

namespace detail {

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  if (b < e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && b != e;
}

template <class T>
bool parse_list(const std::string& s, std::vector<T>& out) {
  out.clear();
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    T v{};
    if (!parse_number(item, v)) return false;
    out.push_back(v);
  }
  return !out.empty();
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  const auto e = s.find_last_not_of(" \t\r\"");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace detail

/// Applies the keys of a config file to `cfg` and returns the problems found
/// (unknown sections or keys, unparsable values) as "section.key: reason".
inline std::vector<std::string> apply_config_file(std::istream& in, experiments::ExperimentConfig& cfg) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    return {std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")"};
  }
  std::vector<std::string> problems;
  auto bad = [&](const std::string& key, const std::string& why) { problems.push_back(key + ": " + why); };

  for (const auto& [section, body] : tree) {
    if (section != "experiment" && section != "solver") {
      bad(section, body.empty() ? "top-level keys must live in [experiment] or [solver]" : "unknown section");
      continue;
    }
    for (const auto& [key_raw, node] : body) {
      const std::string key = section + "." + key_raw;
      const std::string val = detail::trim(node.get_value<std::string>());
      bool ok = true;
      if (key == "experiment.kind") {
        const auto k = experiments::parse_kind(val);
        ok = k.has_value();
        if (ok) cfg.kind = *k;
      } else if (key == "experiment.example") {
        cfg.example = val;
      } else if (key == "experiment.dim") {
        ok = detail::parse_number(val, cfg.dim);
      } else if (key == "experiment.epsilon") {
        ok = detail::parse_list(val, cfg.epsilons);
      } else if (key == "experiment.n") {
        ok = detail::parse_list(val, cfg.sizes);
      } else if (key == "experiment.trials") {
        ok = detail::parse_number(val, cfg.trials);
      } else if (key == "experiment.mc_points") {
        ok = detail::parse_number(val, cfg.mc_points);
      } else if (key == "experiment.seed") {
        ok = detail::parse_number(val, cfg.seed);
      } else if (key == "experiment.gamma") {
        double g = 0.0;
        ok = detail::parse_number(val, g);
        if (ok) cfg.gamma = g;
      } else if (key == "experiment.smooth_beta") {
        ok = detail::parse_number(val, cfg.smooth_beta);
      } else if (key == "experiment.elliptical_beta") {
        ok = detail::parse_number(val, cfg.elliptical_beta);
      } else if (key == "experiment.calibration_points") {
        ok = detail::parse_number(val, cfg.calibration_points);
      } else if (key == "solver.tol") {
        ok = detail::parse_number(val, cfg.tol);
      } else if (key == "solver.max_iter") {
        ok = detail::parse_number(val, cfg.max_iter);
      } else {
        bad(key, "unknown key");
        continue;
      }
      if (!ok) bad(key, "cannot parse '" + val + "'");
    }
  }
  return problems;
}

inline std::vector<std::string> apply_config_file(const std::string& path, experiments::ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) return {path + ": cannot open config file"};
  auto problems = apply_config_file(in, cfg);
  for (auto& p : problems) p = path + ": " + p;
  return problems;
}

}  // namespace entromap::io
