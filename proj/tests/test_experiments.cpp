#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "entromap/experiments.hpp"

using namespace entromap;
using namespace entromap::experiments;

namespace {

ExperimentRecord row(double mse, std::size_t trial) {
  ExperimentRecord r;
  r.example = "E1";
  r.estimator = "biased";
  r.d = 2;
  r.epsilon = 0.1;
  r.n = 10;
  r.trial = trial;
  r.mse = mse;
  return r;
}

std::string csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream os;
  write_csv(os, records);
  return os.str();
}

ExperimentConfig small_synthetic(const std::string& example) {
  ExperimentConfig c;
  c.kind = Kind::synthetic;
  c.example = example;
  c.dim = 3;
  c.epsilons = {0.1, 0.5};
  c.sizes = {10, 40};
  c.trials = 3;
  c.mc_points = 2000;
  c.calibration_points = 100'000;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Aggregate, HandArithmetic) {
  auto out = aggregate({row(1.0, 0), row(3.0, 1)});
  ASSERT_EQ(out.size(), 3u);
  const auto& agg = out.back();
  EXPECT_TRUE(agg.is_aggregate());
  EXPECT_DOUBLE_EQ(agg.mse, 2.0);
  EXPECT_DOUBLE_EQ(*agg.std, std::sqrt(2.0));
}

TEST(Aggregate, SingleTrialAndConstants) {
  auto one = aggregate({row(0.7, 0)});
  EXPECT_EQ(*one.back().std, 0.0);
  EXPECT_EQ(one.back().mse, 0.7);
  auto same = aggregate({row(0.25, 0), row(0.25, 1), row(0.25, 2)});
  EXPECT_EQ(same.back().mse, 0.25);
  EXPECT_EQ(*same.back().std, 0.0);
}

TEST(Aggregate, PropagatesNonConvergence) {
  auto r = row(1.0, 1);
  r.converged = false;
  auto out = aggregate({row(1.0, 0), r});
  EXPECT_FALSE(out.back().converged);
}

TEST(ClosedForm, RecordCountForSingleEpsilon) {
  ExperimentConfig c = *preset("stretch");
  c.epsilons = {0.3};
  const auto r = run_closed_form(c);
  ASSERT_EQ(r.size(), 4u);
  std::set<std::string> names;
  for (const auto& x : r) names.insert(x.estimator);
  EXPECT_EQ(names, (std::set<std::string>{"biased", "debiased", "limit_biased", "limit_debiased"}));
  for (const auto& x : r) EXPECT_FALSE(x.n.has_value());
}

TEST(ClosedForm, StretchPairRegime) {
  ExperimentConfig c = *preset("stretch");
  c.epsilons = logspace(-2.0, 4.0, 31);
  const auto r = run_closed_form(c);
  std::map<double, std::map<std::string, double>> by_eps;
  double lim_b = 0, lim_d = 0;
  for (const auto& x : r) {
    if (x.estimator == "limit_biased") lim_b = x.mse;
    else if (x.estimator == "limit_debiased") lim_d = x.mse;
    else by_eps[x.epsilon][x.estimator] = x.mse;
  }
  for (const auto& [eps, v] : by_eps)
    if (eps <= 0.1 + 1e-12) EXPECT_LT(v.at("debiased"), v.at("biased")) << "eps " << eps;
  const auto& last = by_eps.rbegin()->second;
  EXPECT_NEAR(by_eps.rbegin()->first, 1e4, 1e-8);
  EXPECT_NEAR(last.at("biased") / lim_b, 1.0, 0.01);
  EXPECT_NEAR(last.at("debiased") / lim_d, 1.0, 0.01);
}

TEST(ClosedForm, ShrinkPairLimits) {
  const auto r = run_closed_form(*preset("shrink"));
  double lim_b = 0, lim_d = 0;
  for (const auto& x : r) {
    if (x.estimator == "limit_biased") lim_b = x.mse;
    if (x.estimator == "limit_debiased") lim_d = x.mse;
  }
  EXPECT_NEAR(lim_b, 0.2, 1e-14);
  EXPECT_LT(lim_b, lim_d);
}

TEST(Synthetic, SmokeOneTrial) {
  ExperimentConfig c = small_synthetic("E1");
  c.trials = 1;
  c.sizes = {10};
  c.epsilons = {0.1};
  const auto r = run_synthetic(c);
  ASSERT_EQ(r.size(), 4u);  // 2 estimators x (trial 0 + aggregate)
  for (const auto& x : r) {
    EXPECT_TRUE(std::isfinite(x.mse));
    EXPECT_GE(x.mse, 0.0);
  }
}

TEST(Synthetic, CellsAppearExactlyOnce) {
  for (const char* ex : {"E1", "E2", "E2p", "E3", "E4"}) {
    const ExperimentConfig c = small_synthetic(ex);
    const auto r = run_synthetic(c);
    std::map<std::tuple<std::string, double, Index, std::string>, int> seen;
    for (const auto& x : r) {
      const std::string trial = x.trial ? std::to_string(*x.trial) : "agg";
      EXPECT_EQ(++seen[std::make_tuple(x.estimator, x.epsilon, *x.n, trial)], 1);
      if (x.converged) {
        EXPECT_TRUE(std::isfinite(x.mse));
        EXPECT_GE(x.mse, 0.0);
      }
      EXPECT_EQ(x.std.has_value(), x.is_aggregate());
      EXPECT_EQ(x.example, ex);
    }
    EXPECT_EQ(r.size(), 2u * 2u * 2u * (3u + 1u)) << ex;
  }
}

TEST(Synthetic, DeterministicReplay) {
  const ExperimentConfig c = small_synthetic("E3");
  EXPECT_EQ(csv(run_synthetic(c)), csv(run_synthetic(c)));
  ExperimentConfig other = c;
  other.seed = 6;
  EXPECT_NE(csv(run_synthetic(c)), csv(run_synthetic(other)));
}

TEST(Synthetic, SmoothingLowersE2Error) {
  ExperimentConfig c = small_synthetic("E2");
  c.dim = 2;
  c.epsilons = {0.05};
  c.sizes = {500};
  c.trials = 2;
  c.mc_points = 20'000;
  ExperimentConfig s = c;
  s.example = "E2p";
  auto agg = [](const std::vector<ExperimentRecord>& r, const char* est) {
    for (const auto& x : r)
      if (x.is_aggregate() && x.estimator == est) return x.mse;
    return -1.0;
  };
  const auto e2 = run_synthetic(c);
  const auto e2p = run_synthetic(s);
  EXPECT_LT(agg(e2p, "biased"), agg(e2, "biased"));
  EXPECT_LT(agg(e2p, "debiased"), agg(e2, "debiased"));
}

TEST(GaussianSweep, ExactRowsMatchClosedForms) {
  ExperimentConfig c;
  c.kind = Kind::gaussian_sweep;
  c.example = "concentrated";
  c.dim = 3;
  c.epsilons = {0.2, 1.0};
  c.sizes = {30};
  c.trials = 2;
  c.mc_points = 1000;
  const auto r = run_gaussian_sweep(c);
  const Matrix sigma = sweep_target_covariance(c);
  EXPECT_NEAR(sigma.trace(), covariance_gamma(3, CovarianceSpread::concentrated), 1e-10);
  int exact = 0;
  for (const auto& x : r) {
    EXPECT_EQ(x.kind, Kind::gaussian_sweep);
    if (x.n) continue;
    ++exact;
    const Matrix id = Matrix::Identity(3, 3);
    const double expected = x.estimator == "biased" ? gaussian::exact_mse_biased(id, sigma, x.epsilon)
                                                    : gaussian::exact_mse_debiased(id, sigma, x.epsilon);
    EXPECT_EQ(x.mse, expected);
  }
  EXPECT_EQ(exact, 4);
}

TEST(GaussianSweep, FiniteSampleNearPopulationValue) {
  ExperimentConfig c;
  c.kind = Kind::gaussian_sweep;
  c.example = "concentrated";
  c.dim = 2;
  c.epsilons = {0.5};
  c.sizes = {10'000};
  c.trials = 4;
  c.mc_points = 20'000;
  c.seed = 3;
  const auto r = run_gaussian_sweep(c);
  std::map<std::string, double> exact;
  for (const auto& x : r)
    if (!x.n) exact[x.estimator] = x.mse;
  for (const auto& x : r) {
    if (!x.is_aggregate()) continue;
    EXPECT_TRUE(x.converged);
    EXPECT_LE(std::abs(x.mse - exact.at(x.estimator)), 3.0 * *x.std + 1e-12)
        << x.estimator << " mse " << x.mse << " exact " << exact.at(x.estimator) << " std " << *x.std;
  }
}

TEST(Csv, Format) {
  ExperimentConfig c = *preset("shrink");
  c.epsilons = {0.5};
  std::vector<ExperimentRecord> records = run_closed_form(c);
  records.push_back(aggregate({row(1.0, 0), row(3.0, 1)}).back());
  const std::string text = csv(records);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "kind,example,estimator,d,epsilon,n,trial,mse,std,runtime_ms,seed,converged");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("closed_form,shrink,biased,2,0.5,inf,0,", 0), 0u) << line;
  EXPECT_NE(line.find(",,,0,true"), std::string::npos) << line;  // empty std and runtime
  bool saw_limit = false, saw_agg = false;
  while (std::getline(in, line)) {
    if (line.find("limit_biased,2,inf,inf,0,0.2,") != std::string::npos) saw_limit = true;
    if (line.find(",agg,2,1.4142135623730951,,0,true") != std::string::npos) saw_agg = true;
  }
  EXPECT_TRUE(saw_limit);
  EXPECT_TRUE(saw_agg);
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-300), "1e-300");
}

TEST(Csv, RuntimeOnlyWhenRequested) {
  ExperimentConfig c = small_synthetic("E1");
  c.trials = 1;
  c.sizes = {10};
  c.epsilons = {0.5};
  for (const auto& x : run_synthetic(c)) EXPECT_FALSE(x.runtime_ms.has_value());
  c.record_runtime = true;
  for (const auto& x : run_synthetic(c)) EXPECT_TRUE(x.runtime_ms.has_value());
}

TEST(Config, ProblemsListEveryOffendingKey) {
  ExperimentConfig c;
  c.example = "E9";
  c.trials = 0;
  c.epsilons = {};
  c.sizes = {0};
  c.mc_points = 0;
  const auto p = c.problems();
  auto has = [&](const std::string& key) {
    for (const auto& s : p)
      if (s.rfind(key + ":", 0) == 0) return true;
    return false;
  };
  for (const char* key : {"example", "trials", "epsilon", "n", "mc_points"}) EXPECT_TRUE(has(key)) << key;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(run_experiment(c), ConfigError);
}

TEST(Config, KindsAndPresets) {
  EXPECT_EQ(parse_kind("gaussian-sweep"), Kind::gaussian_sweep);
  EXPECT_EQ(parse_kind("closed-form"), Kind::closed_form);
  EXPECT_EQ(parse_kind("synthetic"), Kind::synthetic);
  EXPECT_FALSE(parse_kind("other"));
  for (const auto& name : preset_names()) {
    const auto p = preset(name);
    ASSERT_TRUE(p) << name;
    EXPECT_TRUE(p->problems().empty()) << name;
  }
  EXPECT_FALSE(preset("nope"));
  EXPECT_EQ(preset("e1-d5")->epsilons, std::vector<double>{0.05});
  EXPECT_EQ(preset("e1-d10")->epsilons, std::vector<double>{0.1});
  EXPECT_EQ(preset("e1-d5")->trials, 20u);
  EXPECT_EQ(preset("e1-d5")->mc_points, 500'000);
}

TEST(Logspace, Endpoints) {
  const auto g = logspace(-2.0, 1.0, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g.front(), 0.01);
  EXPECT_DOUBLE_EQ(g[1], 0.1);
  EXPECT_DOUBLE_EQ(g.back(), 10.0);
}
