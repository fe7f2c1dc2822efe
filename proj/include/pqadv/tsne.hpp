#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace pqadv {

// Exact (quadratic) t-SNE; intended for n up to a couple thousand points.

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  uint64_t seed = 0;
  // schedule
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;  // from exaggeration_iters onward
  double init_sigma = 1e-4;
  int kl_trace_last = 100;  // record the objective over the final iterations
};

struct TsneResult {
  std::vector<std::array<double, 2>> points;
  std::vector<double> kl_trace;
};

/// Deterministic given the seed. Throws TooFewPoints when n < 3*perplexity
/// and PerplexityTooLarge when the bandwidth search cannot reach the target
/// (e.g. degenerate duplicate inputs).
TsneResult tsne_project(const std::vector<std::vector<double>>& vectors,
                        const TsneConfig& cfg);

}  // namespace pqadv
