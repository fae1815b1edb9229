#include "mmclust/pipeline.hpp"

#include <chrono>

#include "mmclust/random.hpp"

namespace mmclust {

void PipelineConfig::set_seed(std::uint64_t seed) {
  init.seed = seed;
  em.seed = derive_seed(seed, 0x5eed);
}

void PipelineConfig::validate(const CountDataset& data) const {
  init.validate();
  em.validate(data.dim());
  if (k_max < 1) throw std::invalid_argument("K_max must be >= 1");
  if (k_min < 1 || k_min > k_max) throw std::invalid_argument("K_min must lie in [1, K_max]");
  if (k_max > data.size()) {
    throw std::invalid_argument("K_max=" + std::to_string(k_max) + " exceeds the number of samples N=" +
                                std::to_string(data.size()));
  }
  if (generation == GenerationMethod::em_hac && k_max < 2) {
    throw std::invalid_argument("em-hac needs K_max >= 2");
  }
  if (criterion == Criterion::l_method && k_max < 4) {
    throw std::invalid_argument("l-method needs K_max >= 4 (two points per fitted line)");
  }
}

PipelineResult cluster(const CountDataset& data, const PipelineConfig& config) {
  config.validate(data);
  const auto start = std::chrono::steady_clock::now();
  PipelineResult result;
  result.candidates = generate_candidates(data, config.k_max, config.generation, config.init, config.em, config.hac);
  result.selection = select_model(result.candidates, config.criterion, config.k_min);
  result.assignments = hard_assignments(result.selected().responsibilities);
  result.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace mmclust
