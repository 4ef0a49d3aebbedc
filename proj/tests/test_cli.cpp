#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "entromap/entromap.hpp"

using namespace entromap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("entromap_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Outcome run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string("ENTROMAP_THREADS=1 \"") + ENTROMAP_CLI_PATH + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string write(const std::string& name, const PointCloud& c) const {
    io::write_point_cloud(path(name).string(), c);
    return path(name).string();
  }

  std::string write_text(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name).string();
  }

  fs::path dir_;
};

double value_after(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string k;
  std::string v;
  while (in >> k >> v)
    if (k == key) return std::stod(v);
  ADD_FAILURE() << "missing " << key << " in:\n" << text;
  return 0.0;
}

}  // namespace

TEST_F(Cli, SolveIdenticalCloudsGivesZeroDivergence) {
  const auto x = write("x.txt", sample_gaussian(GaussianParams::standard(2), 100, 3));
  const Outcome r = run("solve " + x + " " + x + " --epsilon 0.5 --tol 1e-9 --out " + path("p.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(std::abs(value_after(r.out, "sinkhorn_divergence")), 1e-8);
  EXPECT_NE(r.out.find("converged true"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("p.json")));
}

TEST_F(Cli, SolveReportsNonConvergenceWithExitTwo) {
  const auto x = write("x.txt", sample_gaussian(GaussianParams::standard(2), 50, 1));
  const auto y = write("y.txt", sample_uniform_cube(60, 2, 2));
  const Outcome r = run("solve " + x + " " + y + " --epsilon 0.01 --max-iter 1 --out " + path("p.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("converged false"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("p.json")));
}

TEST_F(Cli, SolveInputErrors) {
  const auto x = write("x.txt", sample_uniform_cube(10, 2, 1));
  Outcome r = run("solve /nonexistent/a.txt " + x + " --epsilon 1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("/nonexistent/a.txt"), std::string::npos);

  const auto bad = write_text("bad.txt", "1 2\n3 4\n5\n");
  r = run("solve " + bad + " " + x + " --epsilon 1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.txt:3: expected 2 values, found 1"), std::string::npos) << r.err;

  const auto x3 = write("x3.txt", sample_uniform_cube(10, 3, 1));
  EXPECT_EQ(run("solve " + x + " " + x3 + " --epsilon 1").code, 1);
  EXPECT_EQ(run("solve " + x + " " + x + " --epsilon -1").code, 1);
  EXPECT_EQ(run("solve " + x + " " + x).code, 1);
  EXPECT_EQ(run("solve " + x + " " + x + " --epsilon 1 --bogus").code, 1);
}

TEST_F(Cli, MapMatchesLibrary) {
  const PointCloud xs = sample_gaussian(GaussianParams::standard(2), 80, 4);
  const PointCloud ys = sample_uniform_cube(70, 2, 5);
  const PointCloud qs = sample_gaussian(GaussianParams::standard(2), 25, 6);
  const auto x = write("x.txt", xs);
  const auto y = write("y.txt", ys);
  const auto q = write("q.txt", qs);
  const std::string pot = path("p.json").string();
  ASSERT_EQ(run("solve " + x + " " + y + " --epsilon 0.2 --tol 1e-9 --out " + pot).code, 0);

  const SolverConfig cfg{0.2, 1e-9, 10'000};
  const FittedMaps fit = fit_maps(xs, ys, cfg);
  for (const bool debiased : {false, true}) {
    const std::string out = path(debiased ? "deb.txt" : "ent.txt").string();
    const Outcome r = run("map " + pot + " " + q + (debiased ? " --debiased" : "") + " --out " + out);
    ASSERT_EQ(r.code, 0) << r.err;
    const PointCloud got = io::read_point_cloud(out);
    const PointCloud want = debiased ? fit.debiased(qs) : fit.entropic(qs);
    EXPECT_LE((got.points() - want.points()).cwiseAbs().maxCoeff(), 1e-12) << "debiased " << debiased;
  }
  const Outcome to_stdout = run("map " + pot + " " + q + " --epsilon 0.2");
  ASSERT_EQ(to_stdout.code, 0) << to_stdout.err;
  EXPECT_EQ(to_stdout.out, slurp(path("ent.txt")));
}

TEST_F(Cli, MapInputErrors) {
  const auto x = write("x.txt", sample_uniform_cube(20, 2, 1));
  const std::string pot = path("p.json").string();
  ASSERT_EQ(run("solve " + x + " " + x + " --epsilon 0.5 --out " + pot).code, 0);
  Outcome r = run("map " + pot + " " + x + " --epsilon 0.4");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("does not match"), std::string::npos);
  const auto empty = write_text("empty.txt", "# nothing\n");
  r = run("map " + pot + " " + empty);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("no points found"), std::string::npos);
  const auto q3 = write("q3.txt", sample_uniform_cube(5, 3, 1));
  EXPECT_EQ(run("map " + pot + " " + q3).code, 1);
  const auto broken = write_text("broken.json", "{");
  EXPECT_EQ(run("map " + broken + " " + x).code, 1);
}

TEST_F(Cli, MapWithSingleTargetPointIsConstant) {
  const auto x = write("x.txt", sample_uniform_cube(30, 2, 1));
  Matrix one(1, 2);
  one << 0.25, -0.5;
  const auto y = write("y.txt", PointCloud(one));
  const std::string pot = path("p.json").string();
  ASSERT_EQ(run("solve " + x + " " + y + " --epsilon 0.1 --out " + pot).code, 0);
  const Outcome r = run("map " + pot + " " + x);
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  const PointCloud got = io::parse_point_cloud(in, "stdout");
  ASSERT_EQ(got.size(), 30);
  for (Index i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got.points()(i, 0), 0.25);
    EXPECT_EQ(got.points()(i, 1), -0.5);
  }
}

TEST_F(Cli, ExperimentRejectsInvalidConfiguration) {
  Outcome r = run("experiment --preset e1-d5 --trials 0 --out " + path("o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("trials"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("o") / "results.csv"));

  const auto cfg = write_text("bad.ini", "[experiment]\ntrials = x\nwidth = 3\n");
  r = run("experiment --config " + cfg + " --example E7 --out " + path("o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("experiment.trials"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("experiment.width"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("example"), std::string::npos) << r.err;

  EXPECT_EQ(run("experiment --preset nope").code, 1);
  EXPECT_EQ(run("experiment --unknown-flag").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, ExperimentIsReproducible) {
  const std::string args = "experiment --kind synthetic --example E1 --dim 2 --epsilon 0.2 --n 30,60 --trials 2 "
                           "--mc-points 500 --seed 7 --out ";
  ASSERT_EQ(run(args + path("a").string()).code, 0);
  ASSERT_EQ(run(args + path("b").string()).code, 0);
  const std::string a = slurp(path("a") / "results.csv");
  EXPECT_EQ(a, slurp(path("b") / "results.csv"));
  EXPECT_EQ(a.substr(0, a.find('\n')), experiments::kCsvHeader);
  EXPECT_TRUE(fs::exists(path("a") / "manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(path("a") / "manifest.json"));
  EXPECT_EQ(manifest["config"]["seed"], 7);
}

TEST_F(Cli, ClosedFormPreset) {
  const Outcome r = run("experiment --preset stretch --out " + path("o").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(path("o") / "results.csv");
  EXPECT_NE(csv.find("closed_form,stretch,limit_debiased,2,inf,inf,0,"), std::string::npos);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, 1u + 2u * 31u + 2u);
}

TEST_F(Cli, ConfigPrecedence) {
  // preset < config file < explicit flags
  const auto cfg = write_text("run.ini", "[experiment]\nepsilon = 0.5\nseed = 3\n[solver]\ntol = 1e-6\n");
  const Outcome r = run("experiment --preset shrink --config " + cfg + " --seed 11 --out " + path("o").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = nlohmann::json::parse(slurp(path("o") / "manifest.json"));
  EXPECT_EQ(manifest["config"]["example"], "shrink");
  EXPECT_EQ(manifest["config"]["epsilon"], std::vector<double>{0.5});
  EXPECT_EQ(manifest["config"]["seed"], 11);
  EXPECT_EQ(manifest["config"]["tol"], 1e-6);
}

TEST_F(Cli, SampleWritesRequestedShape) {
  const Outcome r = run("sample --law gaussian --n 17 --dim 3 --seed 2 --out " + path("s.txt").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const PointCloud c = io::read_point_cloud(path("s.txt").string());
  EXPECT_EQ(c.size(), 17);
  EXPECT_EQ(c.dim(), 3);
  EXPECT_EQ(c.points(), sample_gaussian(GaussianParams::standard(3), 17, 2).points());
  EXPECT_EQ(run("sample --law cauchy").code, 1);
}
