// Fits both map estimators on E1 samples and compares their Monte-Carlo MSE.

#include <cstdio>

#include "entromap/entromap.hpp"

int main() {
  using namespace entromap;
  const Index d = 5;
  const Index n = 1000;
  const double eps = 0.05;

  const GroundTruthMap truth = GroundTruthMap::e1(d);
  const PointCloud x = sample_uniform_cube(n, d, derive_seed(42, {stream::kSource}));
  const PointCloud y = truth(x);
  const PointCloud mc = sample_uniform_cube(100'000, d, derive_seed(42, {stream::kEvaluation}));

  const FittedMaps fit = fit_maps(x, y, SolverConfig{eps, 1e-6, 20'000});
  std::printf("sinkhorn iterations: %zu (residual %.2e)\n", fit.potentials.iterations,
              fit.potentials.marginal_residual);
  std::printf("self-potential iterations: %zu\n", fit.self.iterations);
  std::printf("entropic map MSE: %.4e\n", mse(fit.entropic, truth, mc));
  std::printf("debiased map MSE: %.4e\n", mse(fit.debiased, truth, mc));
  return fit.converged() ? 0 : 2;
}
