#include <doctest.h>

#include <cmath>

#include "mmclust/eval.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace mmclust;

namespace {

MethodSpec quick_method(GenerationMethod gen, Criterion crit, bool at_true_k = false) {
  MethodSpec m;
  m.config.init.trials = 2;
  m.config.init.short_run_iterations = 10;
  m.config.generation = gen;
  m.config.criterion = crit;
  m.config.k_max = 6;
  m.id = to_string(gen) + "/" + to_string(crit);
  m.at_true_k = at_true_k;
  return m;
}

DatasetSpec synth_dataset(const std::string& id, int k, std::uint64_t seed, bool regenerate = false) {
  SynthSpec spec;
  spec.k = k;
  spec.d = 8;
  spec.n = 200;
  spec.seed = seed;
  return DatasetSpec{id, spec, regenerate};
}

}  // namespace

TEST_CASE("ARI hand values") {
  const std::vector<int> a{1, 1, 2, 2}, b{2, 2, 1, 1}, c{1, 2, 1, 2};
  CHECK(adjusted_rand_index(a, b) == 1.0);
  CHECK(adjusted_rand_index(a, a) == 1.0);
  CHECK(adjusted_rand_index(a, c) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK_THROWS_AS(adjusted_rand_index(a, std::vector<int>{1, 2}), DimensionError);
  CHECK_THROWS(adjusted_rand_index(std::vector<int>{1}, std::vector<int>{1}));
}

TEST_CASE("ARI matches pair counting on every partition pair up to n=6") {
  for (int n = 2; n <= 6; ++n) {
    std::vector<std::vector<int>> all;
    oracle::for_each_partition(n, [&](const std::vector<int>& p) { all.push_back(p); });
    for (const auto& p : all) {
      for (const auto& q : all) {
        const double ari = adjusted_rand_index(p, q);
        REQUIRE(std::abs(ari - oracle::pair_count_ari(p, q)) <= 1e-12);
        CHECK(ari <= 1.0 + 1e-15);
        CHECK((ari == 1.0) == (p == q));
      }
    }
  }
}

TEST_CASE("ARI matches pair counting on random labelings") {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto p = fixture::random_labels(50, 1 + i % 7, rng);
    const auto q = fixture::random_labels(50, 1 + (i / 7) % 7, rng);
    CHECK(std::abs(adjusted_rand_index(p, q) - oracle::pair_count_ari(p, q)) <= 1e-12);
  }
}

TEST_CASE("stability") {
  CHECK(stability(std::vector<double>{0.4, 0.4, 0.4}) == 0.0);
  CHECK(stability(std::vector<double>{0, 1}) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(stability(std::vector<double>{0.1, 0.9, 0.5}) == stability(std::vector<double>{0.9, 0.5, 0.1}));
  CHECK_THROWS(stability(std::vector<double>{0.3}));
}

TEST_CASE("summaries") {
  std::vector<RunRecord> records(4);
  const double aris[] = {0.5, 1.0, 0.0, 0.0};
  for (int i = 0; i < 4; ++i) {
    records[static_cast<std::size_t>(i)].ari = aris[i];
    records[static_cast<std::size_t>(i)].elapsed = 1.0 + i;
    records[static_cast<std::size_t>(i)].true_k = 3;
    records[static_cast<std::size_t>(i)].selected_k = i < 2 ? 3 : 4;
  }
  records[3].error = "boom";
  const Summary s = summarize(records);
  CHECK(s.runs == 4);
  CHECK(s.failures == 1);
  CHECK(s.mean_ari == doctest::Approx(0.5));
  CHECK(s.stability == doctest::Approx(0.5));
  CHECK(s.mean_time == doctest::Approx(2.0));
  CHECK(s.correct_k_rate == doctest::Approx(2.0 / 3));
}

TEST_CASE("single-run benchmark echoes its record") {
  BenchmarkGrid grid;
  grid.datasets.push_back(synth_dataset("ws3", 3, 1));
  grid.methods.push_back(quick_method(GenerationMethod::em_hac, Criterion::bic));
  const BenchmarkReport report = run_benchmark(grid, 1, 5);
  REQUIRE(report.records.size() == 1);
  REQUIRE(report.cells.size() == 1);
  const RunRecord& r = report.records[0];
  CHECK(r.ok());
  CHECK(r.true_k == 3);
  CHECK(r.ari >= -1.0);
  CHECK(r.ari <= 1.0);
  CHECK(r.elapsed >= 0.0);
  CHECK(report.cells[0].mean_ari == r.ari);
  CHECK(report.cells[0].correct_k_rate == (r.selected_k == 3 ? 1.0 : 0.0));
}

TEST_CASE("benchmark is deterministic across thread counts") {
  BenchmarkGrid grid;
  grid.datasets.push_back(synth_dataset("a", 3, 1));
  grid.datasets.push_back(synth_dataset("b", 2, 2, true));
  grid.methods.push_back(quick_method(GenerationMethod::em_hac, Criterion::bic));
  grid.methods.push_back(quick_method(GenerationMethod::int_em, Criterion::icl, true));
  const BenchmarkReport serial = run_benchmark(grid, 3, 9, 1);
  const BenchmarkReport parallel = run_benchmark(grid, 3, 9, 4);
  REQUIRE(serial.records.size() == 12);
  REQUIRE(parallel.records.size() == 12);
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    CHECK(serial.records[i].dataset_id == parallel.records[i].dataset_id);
    CHECK(serial.records[i].method_id == parallel.records[i].method_id);
    CHECK(serial.records[i].ari == parallel.records[i].ari);
    CHECK(serial.records[i].selected_k == parallel.records[i].selected_k);
    CHECK(serial.records[i].seed == parallel.records[i].seed);
  }
  REQUIRE(serial.methods.size() == 2);
  CHECK(serial.methods[0].runs == 6);
}

TEST_CASE("failed runs are recorded and excluded") {
  BenchmarkGrid grid;
  DatasetSpec impossible = synth_dataset("impossible", 4, 1);
  std::get<SynthSpec>(impossible.source).dirichlet_alpha = 1e4;
  grid.datasets.push_back(impossible);
  Rng rng(1);
  auto tiny = std::make_shared<const CountDataset>(CountDataset::from_dense(fixture::random_counts(4, 3, 3, rng)));
  grid.datasets.push_back(DatasetSpec{"tiny", tiny, false});
  grid.methods.push_back(quick_method(GenerationMethod::em_hac, Criterion::bic));
  const BenchmarkReport report = run_benchmark(grid, 2, 0);
  REQUIRE(report.records.size() == 4);
  for (const RunRecord& r : report.records) CHECK_FALSE(r.ok());
  CHECK(report.cells[0].failures == 2);
  CHECK(std::isnan(report.cells[0].mean_ari));
  CHECK_THROWS(run_benchmark(grid, 0, 0));
  CHECK_THROWS(run_benchmark(BenchmarkGrid{}, 1, 0));
}

TEST_CASE("unlabeled datasets report no ARI") {
  Rng rng(4);
  auto data = std::make_shared<const CountDataset>(CountDataset::from_dense(fixture::random_counts(40, 5, 4, rng)));
  BenchmarkGrid grid;
  grid.datasets.push_back(DatasetSpec{"plain", data, false});
  grid.methods.push_back(quick_method(GenerationMethod::mul_em, Criterion::mml));
  const BenchmarkReport report = run_benchmark(grid, 2, 1);
  for (const RunRecord& r : report.records) {
    CHECK(r.ok());
    CHECK(std::isnan(r.ari));
    CHECK(r.true_k == 0);
  }
  CHECK(std::isnan(report.cells[0].correct_k_rate));
}
