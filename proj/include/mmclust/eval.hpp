// Clustering metrics and the benchmark harness.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mmclust/pipeline.hpp"
#include "mmclust/synth.hpp"

namespace mmclust {

/// Adjusted Rand Index between two labelings of the same samples. Label
/// values are opaque; only the induced partitions matter.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Sample standard deviation of ARI values across runs; lower is more stable.
double stability(std::span<const double> values);

struct DatasetSpec {
  std::string id;
  std::variant<SynthSpec, std::shared_ptr<const CountDataset>> source;
  /// Synthetic only: draw a fresh dataset for every repeat instead of
  /// varying only the method seed on one dataset.
  bool regenerate_per_repeat = false;
};

struct MethodSpec {
  std::string id;
  PipelineConfig config;
  /// Score the candidate with the true number of clusters instead of the
  /// selected one.
  bool at_true_k = false;
};

struct BenchmarkGrid {
  std::vector<DatasetSpec> datasets;
  std::vector<MethodSpec> methods;
};

struct RunRecord {
  std::string dataset_id;
  std::string method_id;
  InitStrategy init = InitStrategy::sm_em;
  GenerationMethod generation = GenerationMethod::em_hac;
  Criterion criterion = Criterion::bic;
  int repeat = 0;
  std::uint64_t seed = 0;
  /// NaN when the dataset has no labels or the run failed.
  double ari = 0.0;
  int selected_k = 0;
  /// 0 when unknown.
  int true_k = 0;
  double elapsed = 0.0;
  std::string error;

  bool ok() const { return error.empty(); }
};

struct Summary {
  std::string dataset_id;  // empty for per-method summaries
  std::string method_id;
  int runs = 0;
  int failures = 0;
  double mean_ari = 0.0;
  /// NaN with fewer than two scored runs.
  double stability = 0.0;
  double mean_time = 0.0;
  /// NaN when no run has a known true K.
  double correct_k_rate = 0.0;
};

struct BenchmarkReport {
  std::uint64_t seed = 0;
  int repeats = 0;
  std::vector<RunRecord> records;
  std::vector<Summary> cells;
  std::vector<Summary> methods;
};

/// Runs every (dataset, method) cell `repeats` times. Cells run concurrently
/// on up to `threads` workers (0 = hardware concurrency); repeats within a
/// cell run sequentially.
BenchmarkReport run_benchmark(const BenchmarkGrid& grid, int repeats, std::uint64_t seed, int threads = 1);

Summary summarize(std::span<const RunRecord> records);

}  // namespace mmclust
