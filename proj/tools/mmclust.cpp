// mmclust: multinomial mixture clustering from the command line.
//
//   mmclust generate  --k 3 --d 10 --n 1000 --separation ws --seed 1 --out DIR
//   mmclust fit       --data DIR/data.txt --labels DIR/labels.txt --out FITDIR
//   mmclust benchmark --config grid.json --repeats 10 --out REPORTDIR
//
// Failures print one JSON line {"error": <category>, "message": ...} on stderr
// and exit with the category's code.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mmclust/eval.hpp"
#include "mmclust/io.hpp"
#include "mmclust/pipeline.hpp"
#include "mmclust/synth.hpp"

namespace fs = std::filesystem;
using namespace mmclust;

namespace {

enum class ExitCode : int { ok = 0, usage = 2, parse = 3, config = 4, separation = 5, runtime = 6, io = 7 };

struct CliError : std::runtime_error {
  CliError(ExitCode code, const std::string& what) : std::runtime_error(what), code(code) {}
  ExitCode code;
};

const char* category(ExitCode code) {
  switch (code) {
    case ExitCode::ok: return "ok";
    case ExitCode::usage: return "usage";
    case ExitCode::parse: return "parse";
    case ExitCode::config: return "config";
    case ExitCode::separation: return "separation";
    case ExitCode::runtime: return "runtime";
    case ExitCode::io: return "io";
  }
  return "runtime";
}

int fail(ExitCode code, const std::string& message) {
  std::cerr << json{{"error", category(code)}, {"message", message}}.dump() << '\n';
  return static_cast<int>(code);
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError(ExitCode::io, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw CliError(ExitCode::io, "cannot write " + path.string());
  out << text;
}

int default_threads() {
  if (const char* env = std::getenv("MMCLUST_THREADS")) {
    try {
      return std::max(0, std::stoi(env));
    } catch (const std::exception&) {
      throw CliError(ExitCode::config, "MMCLUST_THREADS must be an integer");
    }
  }
  return 0;
}

struct GenerateArgs {
  int k = 3;
  int d = 10;
  int n = 1000;
  double alpha = 0.0;
  std::string separation = "ws";
  double threshold = kDefaultSeparationThreshold;
  std::uint64_t seed = 0;
  std::string out;
};

void run_generate(const GenerateArgs& args) {
  SynthSpec spec;
  spec.k = args.k;
  spec.d = args.d;
  spec.n = args.n;
  if (args.alpha > 0) spec.dirichlet_alpha = args.alpha;
  spec.separation = parse_separation(args.separation);
  spec.separation_threshold = args.threshold;
  spec.seed = args.seed;
  spec.validate();

  SynthDataset generated = generate(spec);
  const fs::path dir(args.out);
  prepare_dir(dir);
  save_sparse_counts(dir / "data.txt", generated.data);
  save_labels(dir / "labels.txt", generated.data.labels());
  json manifest = synth_manifest(spec, generated.truth);
  manifest["dataset"] = dataset_manifest(generated.data);
  manifest["files"] = {{"data", "data.txt"}, {"labels", "labels.txt"}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << spec.n << " samples (K=" << spec.k << ", D=" << spec.d << ") to " << dir.string() << '\n';
}

struct FitArgs {
  std::string data;
  std::string labels;
  int k_max = 15;
  int k_min = 2;
  std::string init = "sm-em";
  std::string gen = "em-hac";
  std::string select = "bic";
  std::uint64_t seed = 0;
  int max_iterations = 100;
  double tolerance = 1e-5;
  bool coefficient = false;
  std::string out;
};

void run_fit(const FitArgs& args) {
  PipelineConfig config;
  try {
    config.init = InitConfig::defaults(parse_init_strategy(args.init));
    config.generation = parse_generation_method(args.gen);
    config.criterion = parse_criterion(args.select);
  } catch (const std::invalid_argument& e) {
    throw CliError(ExitCode::config, e.what());
  }
  config.k_min = args.k_min;
  config.k_max = args.k_max;
  config.em.max_iterations = args.max_iterations;
  config.em.tolerance = args.tolerance;
  config.em.coefficient = args.coefficient ? Coefficient::included : Coefficient::excluded;
  config.set_seed(args.seed);

  // Flag combinations that cannot work are rejected before loading any data.
  if (config.criterion == Criterion::l_method && config.k_max < 4) {
    throw CliError(ExitCode::config, "l-method needs --kmax >= 4");
  }
  if (config.generation == GenerationMethod::em_hac && config.k_max < 2) {
    throw CliError(ExitCode::config, "em-hac needs --kmax >= 2");
  }

  CountDataset data = load_sparse_counts(args.data);
  if (!args.labels.empty()) data = data.with_labels(load_labels(args.labels));
  try {
    config.validate(data);
  } catch (const std::invalid_argument& e) {
    throw CliError(ExitCode::config, e.what());
  }

  const PipelineResult result = cluster(data, config);
  const fs::path dir(args.out);
  prepare_dir(dir);

  {
    std::ofstream out(dir / "assignments.txt");
    if (!out) throw CliError(ExitCode::io, "cannot write assignments");
    write_labels(out, result.assignments);
  }
  {
    std::ofstream out(dir / "curve.csv");
    if (!out) throw CliError(ExitCode::io, "cannot write curve");
    write_curve_csv(out, result.selection.curve);
  }

  json summary;
  summary["selected_k"] = result.selection.k;
  summary["criterion"] = to_string(config.criterion);
  summary["generation"] = to_string(config.generation);
  summary["init"] = to_string(config.init.strategy);
  summary["k_min"] = config.k_min;
  summary["k_max"] = config.k_max;
  summary["seed"] = args.seed;
  summary["coefficient"] = args.coefficient;
  summary["dataset"] = dataset_manifest(data);
  summary["selected"] = fit_to_json(result.selected(), false, false);
  if (data.has_labels()) summary["ari"] = adjusted_rand_index(result.assignments, data.labels());
  write_text(dir / "result.json", summary.dump(2) + "\n");
  write_text(dir / "candidates.json", candidates_to_json(result.candidates, false).dump(2) + "\n");

  json timing;
  timing["total_elapsed"] = result.elapsed;
  timing["generation_elapsed"] = result.candidates.total_elapsed;
  for (const auto& [k, fit] : result.candidates.entries) timing["per_k"][std::to_string(k)] = fit.elapsed;
  write_text(dir / "timing.json", timing.dump(2) + "\n");

  std::cout << "selected K=" << result.selection.k;
  if (data.has_labels()) std::cout << " ARI=" << summary["ari"].get<double>();
  std::cout << '\n';
}

struct BenchmarkArgs {
  std::string config;
  int repeats = 0;
  std::uint64_t seed = 0;
  int threads = -1;
  std::string out;
};

void run_benchmark_command(const BenchmarkArgs& args) {
  std::ifstream in(args.config);
  if (!in) throw CliError(ExitCode::io, "cannot open " + args.config);
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CliError(ExitCode::config, std::string("invalid JSON: ") + e.what());
  }
  auto [grid, file_repeats] = parse_benchmark_grid(config, fs::path(args.config).parent_path());
  const int repeats = args.repeats > 0 ? args.repeats : file_repeats.value_or(10);
  const int threads = args.threads >= 0 ? args.threads : default_threads();

  const BenchmarkReport report = run_benchmark(grid, repeats, args.seed, threads);
  const fs::path dir(args.out);
  prepare_dir(dir);
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  std::ofstream csv(dir / "report.csv");
  if (!csv) throw CliError(ExitCode::io, "cannot write report.csv");
  write_report_csv(csv, report);

  for (const Summary& s : report.cells) {
    std::cout << s.dataset_id << '\t' << s.method_id << "\tARI=" << s.mean_ari << "\tstd=" << s.stability
              << "\ttime=" << s.mean_time << "\tcorrect_k=" << s.correct_k_rate << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multinomial mixture model clustering"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Draw a labeled synthetic dataset");
  generate_cmd->add_option("--k", gen.k, "Number of clusters")->capture_default_str();
  generate_cmd->add_option("--d", gen.d, "Dimension")->capture_default_str();
  generate_cmd->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  generate_cmd->add_option("--alpha", gen.alpha, "Dirichlet concentration (default 0.1 ws, 1.0 nws)");
  generate_cmd->add_option("--separation", gen.separation, "ws or nws")->capture_default_str();
  generate_cmd->add_option("--threshold", gen.threshold, "Minimum pairwise sKLD for ws")->capture_default_str();
  generate_cmd->add_option("--seed", gen.seed)->capture_default_str();
  generate_cmd->add_option("--out", gen.out, "Output directory")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Cluster a dataset and select the number of clusters");
  fit_cmd->add_option("--data", fit.data, "Sparse count file")->required();
  fit_cmd->add_option("--labels", fit.labels, "Ground-truth labels for ARI");
  fit_cmd->add_option("--kmax", fit.k_max)->capture_default_str();
  fit_cmd->add_option("--kmin", fit.k_min)->capture_default_str();
  fit_cmd->add_option("--init", fit.init, "random, rnd-em, sm-em, cem, sem")->capture_default_str();
  fit_cmd->add_option("--gen", fit.gen, "mul-em, int-em, em-hac")->capture_default_str();
  fit_cmd->add_option("--select", fit.select, "bic, icl, mml, llh, l-method")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed)->capture_default_str();
  fit_cmd->add_option("--max-iterations", fit.max_iterations)->capture_default_str();
  fit_cmd->add_option("--tolerance", fit.tolerance)->capture_default_str();
  fit_cmd->add_flag("--coefficient", fit.coefficient, "Include the multinomial coefficient in log-likelihoods");
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Run a grid of datasets x methods");
  bench_cmd->add_option("--config", bench.config, "JSON grid")->required();
  bench_cmd->add_option("--repeats", bench.repeats, "Runs per cell (default: grid value or 10)");
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = auto; default MMCLUST_THREADS)");
  bench_cmd->add_option("--out", bench.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ExitCode::usage, e.what());
  }

  try {
    if (*generate_cmd) run_generate(gen);
    if (*fit_cmd) run_fit(fit);
    if (*bench_cmd) run_benchmark_command(bench);
  } catch (const CliError& e) {
    return fail(e.code, e.what());
  } catch (const ParseError& e) {
    return fail(ExitCode::parse, e.what());
  } catch (const IoError& e) {
    return fail(ExitCode::io, e.what());
  } catch (const SeparationError& e) {
    return fail(ExitCode::separation, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(ExitCode::config, e.what());
  } catch (const std::exception& e) {
    return fail(ExitCode::runtime, e.what());
  }
  return 0;
}
