#include "mmclust/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace mmclust {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::optional<long long> to_integer(std::string_view token) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

bool next_line(std::istream& in, std::string& line, long& lineno) {
  if (!std::getline(in, line)) return false;
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

constexpr std::array<ReferenceCorpus, 8> kReferenceCorpora{{
    {"ng20", 19949, 43586, 20},
    {"classic", 7094, 41681, 4},
    {"ohscal", 11162, 11465, 10},
    {"k1b", 2340, 21839, 6},
    {"hitech", 2310, 10080, 6},
    {"reviews", 4069, 18483, 5},
    {"sports", 8580, 14870, 7},
    {"la12", 6279, 31472, 6},
}};

// Schema helpers for the benchmark grid.
const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw SchemaError(path + "/" + key, "missing required field");
  return obj.at(key);
}

template <typename T>
T field(const json& obj, const std::string& key, const std::string& path, std::optional<T> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw SchemaError(path + "/" + key, "missing required field");
  }
  const json& v = obj.at(key);
  const std::string where = path + "/" + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw SchemaError(where, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw SchemaError(where, "expected an integer");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw SchemaError(where, "expected a number");
  } else {
    if (!v.is_string()) throw SchemaError(where, "expected a string");
  }
  return v.get<T>();
}

template <typename Parse>
auto named(const json& obj, const std::string& key, const std::string& path, const std::string& fallback,
           Parse parse) {
  const std::string name = field<std::string>(obj, key, path, fallback);
  try {
    return parse(name);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path + "/" + key, e.what());
  }
}

DatasetSpec parse_dataset(const json& obj, const std::string& path, const std::filesystem::path& base_dir) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  DatasetSpec spec;
  spec.id = field<std::string>(obj, "id", path);
  if (obj.contains("data")) {
    std::filesystem::path data_path = field<std::string>(obj, "data", path);
    if (data_path.is_relative()) data_path = base_dir / data_path;
    CountDataset data = load_sparse_counts(data_path);
    if (obj.contains("labels")) {
      std::filesystem::path labels_path = field<std::string>(obj, "labels", path);
      if (labels_path.is_relative()) labels_path = base_dir / labels_path;
      data = data.with_labels(load_labels(labels_path));
    }
    spec.source = std::make_shared<const CountDataset>(std::move(data));
    return spec;
  }
  SynthSpec synth;
  synth.k = field<int>(obj, "k", path);
  synth.d = field<int>(obj, "d", path);
  synth.n = field<int>(obj, "n", path, 1000);
  synth.separation = named(obj, "separation", path, "ws", parse_separation);
  if (obj.contains("alpha")) synth.dirichlet_alpha = field<double>(obj, "alpha", path);
  synth.separation_threshold = field<double>(obj, "threshold", path, kDefaultSeparationThreshold);
  if (obj.contains("order_min") || obj.contains("order_max")) {
    synth.order_range = std::pair{field<int>(obj, "order_min", path), field<int>(obj, "order_max", path)};
  }
  synth.seed = field<std::uint64_t>(obj, "seed", path, std::uint64_t{0});
  try {
    synth.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
  spec.source = synth;
  spec.regenerate_per_repeat = field<bool>(obj, "regenerate", path, false);
  return spec;
}

MethodSpec parse_method(const json& obj, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  MethodSpec method;
  const InitStrategy strategy = named(obj, "init", path, "sm-em", parse_init_strategy);
  PipelineConfig& c = method.config;
  c.init = InitConfig::defaults(strategy);
  c.init.trials = field<int>(obj, "trials", path, c.init.trials);
  c.init.short_run_iterations = field<int>(obj, "short_run_iterations", path, c.init.short_run_iterations);
  c.generation = named(obj, "gen", path, "em-hac", parse_generation_method);
  c.criterion = named(obj, "select", path, "bic", parse_criterion);
  c.k_min = field<int>(obj, "kmin", path, 2);
  c.k_max = field<int>(obj, "kmax", path, 15);
  c.em.max_iterations = field<int>(obj, "max_iterations", path, c.em.max_iterations);
  c.em.tolerance = field<double>(obj, "tolerance", path, c.em.tolerance);
  method.at_true_k = field<bool>(obj, "true_k", path, false);
  method.id = field<std::string>(obj, "id", path,
                                 to_string(strategy) + "/" + to_string(c.generation) + "/" + to_string(c.criterion));
  return method;
}

}  // namespace

CountDataset read_counts(std::istream& in, const std::string& source) {
  std::string line;
  long lineno = 0;
  if (!next_line(in, line, lineno)) throw ParseError(source, 1, "missing header");
  const auto header = split_ws(line);
  if (header.size() != 2 && header.size() != 3) {
    throw ParseError(source, lineno, "header must be 'N D NNZ' (sparse) or 'N D' (dense)");
  }
  std::array<long long, 3> h{0, 0, 0};
  for (std::size_t t = 0; t < header.size(); ++t) {
    const auto v = to_integer(header[t]);
    if (!v || *v < 0) throw ParseError(source, lineno, "header field '" + std::string(header[t]) + "' is not a non-negative integer");
    h[t] = *v;
  }
  const long long n = h[0];
  const long long d = h[1];
  if (n < 1 || d < 1) throw ParseError(source, lineno, "header needs N >= 1 and D >= 1");
  const bool sparse = header.size() == 3;

  std::vector<Eigen::Triplet<double>> triplets;
  for (long long i = 0; i < n; ++i) {
    if (!next_line(in, line, lineno)) {
      throw ParseError(source, lineno + 1, "expected " + std::to_string(n) + " rows, found " + std::to_string(i));
    }
    if (sparse) {
      std::set<long long> seen;
      for (std::string_view token : split_ws(line)) {
        const auto colon = token.find(':');
        if (colon == std::string_view::npos) {
          throw ParseError(source, lineno, "entry '" + std::string(token) + "' is not column:count");
        }
        const auto col = to_integer(token.substr(0, colon));
        const auto count = to_integer(token.substr(colon + 1));
        if (!col || *col < 1 || *col > d) {
          throw ParseError(source, lineno, "column index in '" + std::string(token) + "' outside [1, " + std::to_string(d) + "]");
        }
        if (!count || *count < 1) {
          throw ParseError(source, lineno, "count in '" + std::string(token) + "' is not a positive integer");
        }
        if (!seen.insert(*col).second) {
          throw ParseError(source, lineno, "column " + std::to_string(*col) + " repeated");
        }
        triplets.emplace_back(i, *col - 1, static_cast<double>(*count));
      }
    } else {
      std::replace(line.begin(), line.end(), ',', ' ');
      const auto tokens = split_ws(line);
      if (static_cast<long long>(tokens.size()) != d) {
        throw ParseError(source, lineno, "expected " + std::to_string(d) + " values, found " + std::to_string(tokens.size()));
      }
      for (long long j = 0; j < d; ++j) {
        const auto v = to_integer(tokens[static_cast<std::size_t>(j)]);
        if (!v || *v < 0) {
          throw ParseError(source, lineno, "value '" + std::string(tokens[static_cast<std::size_t>(j)]) + "' is not a non-negative integer");
        }
        if (*v > 0) triplets.emplace_back(i, j, static_cast<double>(*v));
      }
    }
  }
  while (next_line(in, line, lineno)) {
    if (!blank(line)) throw ParseError(source, lineno, "unexpected data after " + std::to_string(n) + " rows");
  }
  if (sparse && static_cast<long long>(triplets.size()) != h[2]) {
    throw ParseError(source, 1, "header declares NNZ=" + std::to_string(h[2]) + " but rows hold " +
                                    std::to_string(triplets.size()) + " entries");
  }
  CountDataset::SparseMatrix counts(n, d);
  counts.setFromTriplets(triplets.begin(), triplets.end());
  return CountDataset(std::move(counts));
}

CountDataset load_sparse_counts(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_counts(in, path.string());
}

void write_sparse_counts(std::ostream& out, const CountDataset& data) {
  const auto& counts = data.counts();
  out << data.size() << ' ' << data.dim() << ' ' << counts.nonZeros() << '\n';
  for (Index i = 0; i < counts.outerSize(); ++i) {
    bool first = true;
    for (CountDataset::SparseMatrix::InnerIterator it(counts, i); it; ++it) {
      if (!first) out << ' ';
      out << it.col() + 1 << ':' << static_cast<long long>(it.value());
      first = false;
    }
    out << '\n';
  }
}

void save_sparse_counts(const std::filesystem::path& path, const CountDataset& data) {
  std::ofstream out = open_out(path);
  write_sparse_counts(out, data);
}

std::vector<int> read_labels(std::istream& in, const std::string& source) {
  std::vector<std::pair<long, std::string>> lines;
  std::string line;
  long lineno = 0;
  while (next_line(in, line, lineno)) lines.emplace_back(lineno, line);
  while (!lines.empty() && blank(lines.back().second)) lines.pop_back();
  std::vector<int> labels;
  labels.reserve(lines.size());
  for (const auto& [number, text] : lines) {
    const auto tokens = split_ws(text);
    const auto v = tokens.size() == 1 ? to_integer(tokens[0]) : std::nullopt;
    if (!v || *v < 1 || *v > std::numeric_limits<int>::max()) {
      throw ParseError(source, number, "label must be a single positive integer");
    }
    labels.push_back(static_cast<int>(*v) - 1);
  }
  return labels;
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_labels(in, path.string());
}

void write_labels(std::ostream& out, const std::vector<int>& labels) {
  for (int label : labels) out << label + 1 << '\n';
}

void save_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::ofstream out = open_out(path);
  write_labels(out, labels);
}

std::span<const ReferenceCorpus> reference_corpora() { return kReferenceCorpora; }

std::optional<ReferenceCorpus> match_reference_corpus(Index n, Index d, int k) {
  for (const ReferenceCorpus& c : kReferenceCorpora) {
    if (c.n == n && c.d == d && (k == 0 || c.k == k)) return c;
  }
  return std::nullopt;
}

json dataset_manifest(const CountDataset& data) {
  json m;
  m["n"] = data.size();
  m["d"] = data.dim();
  m["nnz"] = data.counts().nonZeros();
  m["total_count"] = static_cast<long long>(data.orders().sum());
  const int k = data.has_labels() ? data.num_classes() : 0;
  m["k"] = data.has_labels() ? json(k) : json(nullptr);
  const auto reference = match_reference_corpus(data.size(), data.dim(), k);
  m["reference_corpus"] = reference ? json(reference->name) : json(nullptr);
  return m;
}

json synth_manifest(const SynthSpec& spec, const GeneratingModel& truth) {
  json m;
  const auto [lo, hi] = spec.orders();
  m["spec"] = {{"k", spec.k},
               {"d", spec.d},
               {"n", spec.n},
               {"alpha", spec.alpha()},
               {"order_range", {lo, hi}},
               {"separation", to_string(spec.separation)},
               {"threshold", spec.separation_threshold},
               {"seed", spec.seed}};
  m["achieved"] = {{"min_skld", std::isfinite(truth.min_skld) ? json(truth.min_skld) : json(nullptr)},
                   {"separation", to_string(classify_separation(truth.model, spec.separation_threshold))},
                   {"attempts", truth.attempts}};
  m["orders"] = truth.orders;
  m["weights"] = std::vector<double>(truth.model.weights().begin(), truth.model.weights().end());
  return m;
}

json fit_to_json(const FitResult& fit, bool include_timing, bool include_parameters) {
  json j;
  j["k"] = fit.num_components();
  j["log_likelihood"] = fit.log_likelihood;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  if (include_timing) j["elapsed"] = fit.elapsed;
  if (include_parameters) {
    const auto& w = fit.model.weights();
    j["weights"] = std::vector<double>(w.begin(), w.end());
    json components = json::array();
    for (Index c = 0; c < fit.model.num_components(); ++c) {
      const Eigen::VectorXd row = fit.model.component(c).transpose();
      components.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["components"] = std::move(components);
  }
  return j;
}

json candidates_to_json(const CandidateModelSet& candidates, bool include_timing, bool include_parameters) {
  json j;
  j["method"] = to_string(candidates.method);
  if (include_timing) j["total_elapsed"] = candidates.total_elapsed;
  json entries = json::array();
  for (const auto& [k, fit] : candidates.entries) entries.push_back(fit_to_json(fit, include_timing, include_parameters));
  j["entries"] = std::move(entries);
  json merges = json::array();
  for (const MergeStep& m : candidates.merges) {
    merges.push_back({{"left", m.left + 1},
                      {"right", m.right + 1},
                      {"dissimilarity", m.dissimilarity},
                      {"weight", m.merged.weight},
                      {"resulting_k", m.resulting_k}});
  }
  j["merges"] = std::move(merges);
  json failures = json::object();
  for (const auto& [k, why] : candidates.failures) failures[std::to_string(k)] = why;
  j["failures"] = std::move(failures);
  return j;
}

namespace {

// NaN (no labels, too few runs) becomes null instead of relying on the serializer.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json summary_to_json(const Summary& s) {
  json j{{"method", s.method_id},
         {"runs", s.runs},
         {"failures", s.failures},
         {"mean_ari", number(s.mean_ari)},
         {"stability", number(s.stability)},
         {"mean_time", number(s.mean_time)},
         {"correct_k_rate", number(s.correct_k_rate)}};
  if (!s.dataset_id.empty()) j["dataset"] = s.dataset_id;
  return j;
}

}  // namespace

json report_to_json(const BenchmarkReport& report) {
  json j;
  j["seed"] = report.seed;
  j["repeats"] = report.repeats;
  j["cells"] = json::array();
  for (const Summary& s : report.cells) j["cells"].push_back(summary_to_json(s));
  j["methods"] = json::array();
  for (const Summary& s : report.methods) j["methods"].push_back(summary_to_json(s));
  j["records"] = json::array();
  for (const RunRecord& r : report.records) {
    j["records"].push_back({{"dataset", r.dataset_id},
                            {"method", r.method_id},
                            {"init", to_string(r.init)},
                            {"generation", to_string(r.generation)},
                            {"criterion", to_string(r.criterion)},
                            {"repeat", r.repeat},
                            {"seed", r.seed},
                            {"ari", number(r.ari)},
                            {"selected_k", r.selected_k},
                            {"true_k", r.true_k},
                            {"elapsed", r.elapsed},
                            {"error", r.ok() ? json(nullptr) : json(r.error)}});
  }
  return j;
}

void write_report_csv(std::ostream& out, const BenchmarkReport& report) {
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  const auto precision = out.precision(17);
  out << "dataset,method,init,generation,criterion,repeat,seed,ari,selected_k,true_k,elapsed,error\n";
  for (const RunRecord& r : report.records) {
    out << quote(r.dataset_id) << ',' << quote(r.method_id) << ',' << to_string(r.init) << ','
        << to_string(r.generation) << ',' << to_string(r.criterion) << ',' << r.repeat << ',' << r.seed << ',';
    if (std::isfinite(r.ari)) out << r.ari;
    out << ',' << r.selected_k << ',' << r.true_k << ',' << r.elapsed << ',' << (r.ok() ? "" : quote(r.error)) << '\n';
  }
  out.precision(precision);
}

std::pair<BenchmarkGrid, std::optional<int>> parse_benchmark_grid(const json& config,
                                                                  const std::filesystem::path& base_dir) {
  if (!config.is_object()) throw SchemaError("", "grid must be a JSON object");
  BenchmarkGrid grid;
  const json& datasets = require(config, "datasets", "");
  if (!datasets.is_array() || datasets.empty()) throw SchemaError("/datasets", "expected a non-empty array");
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    grid.datasets.push_back(parse_dataset(datasets[i], "/datasets/" + std::to_string(i), base_dir));
  }
  const json& methods = require(config, "methods", "");
  if (!methods.is_array() || methods.empty()) throw SchemaError("/methods", "expected a non-empty array");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    grid.methods.push_back(parse_method(methods[i], "/methods/" + std::to_string(i)));
  }
  std::optional<int> repeats;
  if (config.contains("repeats")) {
    repeats = field<int>(config, "repeats", "");
    if (*repeats < 1) throw SchemaError("/repeats", "must be >= 1");
  }
  return {std::move(grid), repeats};
}

}  // namespace mmclust
