#include "mmclust/eval.hpp"

#include <atomic>
#include <chrono>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "mmclust/random.hpp"

namespace mmclust {

namespace {

double pairs(double n) { return n * (n - 1.0) / 2.0; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PreparedDataset {
  std::shared_ptr<const CountDataset> data;
  int true_k = 0;
};

PreparedDataset prepare(const DatasetSpec& spec, int repeat) {
  if (const auto* synth = std::get_if<SynthSpec>(&spec.source)) {
    SynthSpec s = *synth;
    if (spec.regenerate_per_repeat) s.seed = derive_seed(synth->seed, static_cast<std::uint64_t>(repeat) + 1);
    return {std::make_shared<const CountDataset>(generate(s).data), s.k};
  }
  const auto& data = std::get<std::shared_ptr<const CountDataset>>(spec.source);
  if (!data) throw std::invalid_argument("dataset '" + spec.id + "' has no data");
  return {data, data->has_labels() ? data->num_classes() : 0};
}

RunRecord run_once(const DatasetSpec& dataset, const PreparedDataset& prepared, const MethodSpec& method,
                   int repeat, std::uint64_t seed) {
  RunRecord record;
  record.dataset_id = dataset.id;
  record.method_id = method.id;
  record.init = method.config.init.strategy;
  record.generation = method.config.generation;
  record.criterion = method.config.criterion;
  record.repeat = repeat;
  record.seed = seed;
  record.true_k = prepared.true_k;
  record.ari = kNaN;
  try {
    PipelineConfig config = method.config;
    config.set_seed(seed);
    const CountDataset& data = *prepared.data;
    const auto start = std::chrono::steady_clock::now();
    PipelineResult result = cluster(data, config);
    record.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record.selected_k = result.selection.k;
    if (data.has_labels()) {
      std::vector<int> predicted = result.assignments;
      if (method.at_true_k) {
        if (prepared.true_k < 1) throw std::invalid_argument("true K is unknown for dataset '" + dataset.id + "'");
        predicted = hard_assignments(result.candidates.at(prepared.true_k).responsibilities);
      }
      record.ari = adjusted_rand_index(predicted, data.labels());
    }
  } catch (const std::exception& e) {
    record.error = e.what();
    if (record.error.empty()) record.error = "unknown failure";
  }
  return record;
}

}  // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw DimensionError("ARI needs equal-length labelings, got " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  if (a.size() < 2) throw std::invalid_argument("ARI needs at least two samples");

  std::map<std::pair<int, int>, double> joint;
  std::unordered_map<int, double> rows;
  std::unordered_map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [cell, count] : joint) index += pairs(count);
  double sum_a = 0.0;
  for (const auto& [label, count] : rows) sum_a += pairs(count);
  double sum_b = 0.0;
  for (const auto& [label, count] : cols) sum_b += pairs(count);

  const double expected = sum_a * sum_b / pairs(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  // Zero denominator only when both labelings are all-singletons or both a
  // single cluster, i.e. identical partitions.
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double stability(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("stability needs at least two values");
  // identical values would otherwise leave rounding residue from the mean
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

Summary summarize(std::span<const RunRecord> records) {
  Summary s;
  if (!records.empty()) s.method_id = records.front().method_id;
  std::vector<double> aris;
  double time = 0.0;
  int timed = 0;
  int with_truth = 0;
  int correct = 0;
  for (const RunRecord& r : records) {
    ++s.runs;
    if (!r.ok()) {
      ++s.failures;
      continue;
    }
    time += r.elapsed;
    ++timed;
    if (std::isfinite(r.ari)) aris.push_back(r.ari);
    if (r.true_k > 0) {
      ++with_truth;
      if (r.selected_k == r.true_k) ++correct;
    }
  }
  s.mean_ari = aris.empty() ? kNaN : std::accumulate(aris.begin(), aris.end(), 0.0) / static_cast<double>(aris.size());
  s.stability = aris.size() < 2 ? kNaN : stability(aris);
  s.mean_time = timed == 0 ? kNaN : time / timed;
  s.correct_k_rate = with_truth == 0 ? kNaN : static_cast<double>(correct) / with_truth;
  return s;
}

BenchmarkReport run_benchmark(const BenchmarkGrid& grid, int repeats, std::uint64_t seed, int threads) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (grid.datasets.empty() || grid.methods.empty()) {
    throw std::invalid_argument("benchmark grid needs at least one dataset and one method");
  }

  // Fixed datasets are materialized once and shared read-only by every cell.
  std::vector<std::optional<PreparedDataset>> shared(grid.datasets.size());
  std::vector<std::string> preparation_errors(grid.datasets.size());
  for (std::size_t d = 0; d < grid.datasets.size(); ++d) {
    if (grid.datasets[d].regenerate_per_repeat) continue;
    try {
      shared[d] = prepare(grid.datasets[d], 0);
    } catch (const std::exception& e) {
      preparation_errors[d] = e.what();
    }
  }

  const std::size_t num_cells = grid.datasets.size() * grid.methods.size();
  std::vector<std::vector<RunRecord>> cell_records(num_cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t cell = next++; cell < num_cells; cell = next++) {
      const std::size_t d = cell / grid.methods.size();
      const DatasetSpec& dataset = grid.datasets[d];
      const MethodSpec& method = grid.methods[cell % grid.methods.size()];
      for (int r = 0; r < repeats; ++r) {
        const std::uint64_t run_seed = derive_seed(seed, static_cast<std::uint64_t>(r) + 1);
        try {
          if (!preparation_errors[d].empty()) throw std::runtime_error(preparation_errors[d]);
          const PreparedDataset prepared = shared[d] ? *shared[d] : prepare(dataset, r);
          cell_records[cell].push_back(run_once(dataset, prepared, method, r, run_seed));
        } catch (const std::exception& e) {
          RunRecord failed;
          failed.dataset_id = dataset.id;
          failed.method_id = method.id;
          failed.repeat = r;
          failed.seed = run_seed;
          failed.ari = kNaN;
          failed.error = e.what();
          cell_records[cell].push_back(std::move(failed));
        }
      }
    }
  };

  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(num_cells));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  BenchmarkReport report;
  report.seed = seed;
  report.repeats = repeats;
  for (std::size_t cell = 0; cell < num_cells; ++cell) {
    Summary s = summarize(cell_records[cell]);
    s.dataset_id = grid.datasets[cell / grid.methods.size()].id;
    s.method_id = grid.methods[cell % grid.methods.size()].id;
    report.cells.push_back(std::move(s));
    report.records.insert(report.records.end(), cell_records[cell].begin(), cell_records[cell].end());
  }
  for (std::size_t m = 0; m < grid.methods.size(); ++m) {
    std::vector<RunRecord> method_records;
    for (const RunRecord& r : report.records) {
      if (r.method_id == grid.methods[m].id) method_records.push_back(r);
    }
    Summary s = summarize(method_records);
    s.method_id = grid.methods[m].id;
    report.methods.push_back(std::move(s));
  }
  return report;
}

}  // namespace mmclust
