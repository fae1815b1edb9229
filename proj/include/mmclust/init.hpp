// Starting points for EM: random simplex draws, best-of-random (rndEM),
// short EM runs (smEM), classification EM (CEM) and stochastic EM (SEM).

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mmclust/core.hpp"

namespace mmclust {

enum class InitStrategy { random, rnd_em, sm_em, cem, sem };

std::string to_string(InitStrategy strategy);
/// Accepts "rnd-em" and "rnd_em" spellings.
InitStrategy parse_init_strategy(std::string_view name);

struct InitConfig {
  InitStrategy strategy = InitStrategy::sm_em;
  int trials = 5;
  /// EM iterations per trial for smEM and CEM; total iterations for SEM.
  int short_run_iterations = 50;
  std::uint64_t seed = 0;
  double prob_floor = kDefaultProbFloor;

  /// 1 trial for random, 100 for rndEM, 5 x 50 iterations for smEM and CEM,
  /// a single 500-iteration run for SEM.
  static InitConfig defaults(InitStrategy strategy, std::uint64_t seed = 0);
  void validate() const;
};

struct InitResult {
  MixtureModel model;
  double log_likelihood = 0.0;
  /// Best-of-trials strategies: final log-likelihood of each trial.
  /// SEM: log-likelihood after each iteration.
  std::vector<double> trace;
};

InitResult init_random(const CountDataset& data, Index k, std::uint64_t seed,
                       double prob_floor = kDefaultProbFloor);
InitResult init_rnd_em(const CountDataset& data, Index k, int trials, std::uint64_t seed,
                       double prob_floor = kDefaultProbFloor);
InitResult init_sm_em(const CountDataset& data, Index k, int trials, int short_run_iterations,
                      std::uint64_t seed, double prob_floor = kDefaultProbFloor);
InitResult init_cem(const CountDataset& data, Index k, int trials, int short_run_iterations,
                    std::uint64_t seed, double prob_floor = kDefaultProbFloor);
InitResult init_sem(const CountDataset& data, Index k, int max_iterations, std::uint64_t seed,
                    double prob_floor = kDefaultProbFloor);

InitResult initialize(const CountDataset& data, Index k, const InitConfig& config);

/// Replaces every row by the one-hot indicator of its argmax (ties: lowest index).
void harden(ResponsibilityMatrix& resp);

/// Replaces every row by a one-hot draw from the categorical distribution it describes.
void sample_assignments(ResponsibilityMatrix& resp, Rng& rng);

}  // namespace mmclust
