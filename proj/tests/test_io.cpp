#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "entromap/io.hpp"
#include "entromap/measures.hpp"

using namespace entromap;
namespace fs = std::filesystem;

namespace {

PointCloud parse(const std::string& text) {
  std::istringstream in(text);
  return io::parse_point_cloud(in, "pts.txt");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const io::InputError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> config(const std::string& text, experiments::ExperimentConfig& cfg) {
  std::istringstream in(text);
  return io::apply_config_file(in, cfg);
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("entromap_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(PointCloudText, SeparatorsCommentsAndBlankLines) {
  const PointCloud p = parse("# header\n1 2\n\n3,4\n  5 ,\t6  # trailing\n+7 -8e-1\n");
  ASSERT_EQ(p.size(), 4);
  ASSERT_EQ(p.dim(), 2);
  EXPECT_EQ(p.points()(1, 0), 3.0);
  EXPECT_EQ(p.points()(2, 1), 6.0);
  EXPECT_EQ(p.points()(3, 0), 7.0);
  EXPECT_EQ(p.points()(3, 1), -0.8);
}

TEST(PointCloudText, ErrorsNameFileAndLine) {
  EXPECT_EQ(parse_error("1 2\n3\n"), "pts.txt:2: expected 2 values, found 1");
  EXPECT_EQ(parse_error("1 2\n# c\n3 x\n"), "pts.txt:3: invalid number 'x'");
  EXPECT_EQ(parse_error("# only a comment\n\n"), "pts.txt: no points found");
  EXPECT_EQ(parse_error(""), "pts.txt: no points found");
  EXPECT_NE(parse_error("1 nan\n"), "");
  EXPECT_THROW(io::read_point_cloud("/nonexistent/cloud.txt"), io::InputError);
}

TEST(PointCloudText, RoundTripIsExact) {
  const PointCloud p = sample_gaussian(GaussianParams::standard(3), 50, 11);
  std::ostringstream os;
  io::write_point_cloud(os, p);
  const PointCloud q = parse(os.str());
  EXPECT_EQ(p.points(), q.points());
}

TEST(ModelJson, RoundTripIsExact) {
  const PointCloud x = sample_gaussian(GaussianParams::standard(2), 20, 1);
  const PointCloud y = sample_gaussian(GaussianParams::standard(2), 15, 2);
  const SolverConfig cfg{0.3, 1e-9, 10'000};
  const io::FittedModel m = io::make_model(x, y, cfg, sinkhorn_divergence_detailed(x, y, cfg));
  EXPECT_TRUE(m.converged);
  const auto dir = temp_dir("model");
  const std::string path = (dir / "pot.json").string();
  io::write_model(path, m);
  const io::FittedModel r = io::read_model(path);
  EXPECT_EQ(r.epsilon, m.epsilon);
  EXPECT_EQ(r.source, m.source);
  EXPECT_EQ(r.target, m.target);
  EXPECT_EQ(r.f, m.f);
  EXPECT_EQ(r.g, m.g);
  EXPECT_EQ(r.alpha, m.alpha);
  EXPECT_EQ(r.beta, m.beta);
  EXPECT_EQ(r.sinkhorn_divergence, m.sinkhorn_divergence);
  EXPECT_EQ(r.iterations, m.iterations);
  EXPECT_EQ(io::to_json(m)["format"], "entromap-potentials");
}

TEST(ModelJson, RejectsInconsistentFiles) {
  const PointCloud x = sample_gaussian(GaussianParams::standard(2), 5, 1);
  const SolverConfig cfg{1.0, 1e-8, 1000};
  auto j = io::to_json(io::make_model(x, x, cfg, sinkhorn_divergence_detailed(x, x, cfg)));
  auto bad_len = j;
  bad_len["g"] = std::vector<double>{1.0, 2.0};
  EXPECT_THROW(io::model_from_json(bad_len), io::InputError);
  auto bad_eps = j;
  bad_eps["epsilon"] = -1.0;
  EXPECT_THROW(io::model_from_json(bad_eps), io::InputError);
  auto missing = j;
  missing.erase("target");
  EXPECT_THROW(io::model_from_json(missing), io::InputError);

  const auto dir = temp_dir("badjson");
  const std::string path = (dir / "broken.json").string();
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(io::read_model(path), io::InputError);
}

TEST(ConfigFile, AppliesEveryKey) {
  experiments::ExperimentConfig c;
  const auto p = config(
      "[experiment]\nkind = gaussian-sweep\nexample = spread\ndim = 4\nepsilon = 0.1, 1\nn = 50,100\n"
      "trials = 3\nmc_points = 500\nseed = 9\ngamma = 2.5\nsmooth_beta = 10\nelliptical_beta = 3\n"
      "calibration_points = 1000\n[solver]\ntol = 1e-7\nmax_iter = 77\n",
      c);
  EXPECT_TRUE(p.empty());
  EXPECT_EQ(c.kind, experiments::Kind::gaussian_sweep);
  EXPECT_EQ(c.example, "spread");
  EXPECT_EQ(c.dim, 4);
  EXPECT_EQ(c.epsilons, (std::vector<double>{0.1, 1.0}));
  EXPECT_EQ(c.sizes, (std::vector<Index>{50, 100}));
  EXPECT_EQ(c.trials, 3u);
  EXPECT_EQ(c.mc_points, 500);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(*c.gamma, 2.5);
  EXPECT_EQ(c.smooth_beta, 10.0);
  EXPECT_EQ(c.elliptical_beta, 3.0);
  EXPECT_EQ(c.calibration_points, 1000);
  EXPECT_EQ(c.tol, 1e-7);
  EXPECT_EQ(c.max_iter, 77u);
}

TEST(ConfigFile, ReportsUnknownAndMalformedKeys) {
  experiments::ExperimentConfig c;
  const auto p = config("[experiment]\ntrials = three\nfoo = 1\nkind = other\n[extra]\nx = 1\n", c);
  auto has = [&](const std::string& s) {
    for (const auto& q : p)
      if (q.rfind(s, 0) == 0) return true;
    return false;
  };
  EXPECT_TRUE(has("experiment.trials: cannot parse"));
  EXPECT_TRUE(has("experiment.foo: unknown key"));
  EXPECT_TRUE(has("experiment.kind: cannot parse"));
  EXPECT_TRUE(has("extra: unknown section"));
  EXPECT_EQ(p.size(), 4u);
}

TEST(ConfigFile, SyntaxErrorAndMissingFile) {
  experiments::ExperimentConfig c;
  const auto p = config("[experiment\nn = 1\n", c);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NE(p.front().find("line 1"), std::string::npos) << p.front();
  const auto missing = io::apply_config_file("/nonexistent/run.ini", c);
  ASSERT_EQ(missing.size(), 1u);
  EXPECT_NE(missing.front().find("cannot open"), std::string::npos);
}

TEST(Manifest, CarriesConfigAndVersion) {
  const auto c = *experiments::preset("e1-d5");
  const auto j = io::manifest(c, 12.5, 7, 3);
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_EQ(j["records"], 7);
  EXPECT_EQ(j["threads"], 3);
  EXPECT_EQ(j["config"]["example"], "E1");
  EXPECT_EQ(j["config"]["trials"], 20);
  EXPECT_FALSE(j["config"].contains("gamma"));
}
