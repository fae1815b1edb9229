// The complete clustering method: initialize, generate candidates, select K.

#pragma once

#include <vector>

#include "mmclust/core.hpp"
#include "mmclust/init.hpp"
#include "mmclust/modelgen.hpp"
#include "mmclust/modelsel.hpp"

namespace mmclust {

struct PipelineConfig {
  InitConfig init = InitConfig::defaults(InitStrategy::sm_em);
  EmConfig em;
  GenerationMethod generation = GenerationMethod::em_hac;
  Criterion criterion = Criterion::bic;
  HacOptions hac;
  int k_min = 2;
  int k_max = 15;

  /// Seeds both the initializer and EM.
  void set_seed(std::uint64_t seed);
  /// Rejects inconsistent settings before any fitting happens.
  void validate(const CountDataset& data) const;
};

struct PipelineResult {
  CandidateModelSet candidates;
  Selection selection;
  /// 0-based argmax labels under the selected model.
  std::vector<int> assignments;
  double elapsed = 0.0;

  const FitResult& selected() const { return candidates.at(selection.k); }
};

PipelineResult cluster(const CountDataset& data, const PipelineConfig& config);

}  // namespace mmclust
