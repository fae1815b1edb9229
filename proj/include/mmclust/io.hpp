// File formats and JSON/CSV emission used by the command-line tool.
//
// Sparse count file:
//   line 1      "N D NNZ"
//   lines 2..   one row per sample, whitespace-separated "column:count" pairs,
//               1-indexed columns, positive counts; an empty line is an all-zero row
// A header of just "N D" switches to dense rows of D integers (whitespace or
// comma separated).
//
// Labels file: one positive integer per line, N lines.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmclust/core.hpp"
#include "mmclust/eval.hpp"
#include "mmclust/modelgen.hpp"
#include "mmclust/synth.hpp"

namespace mmclust {

using json = nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, long line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line(line) {}
  long line;
};

/// A file could not be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid benchmark grid; the message starts with the JSON pointer of the offending value.
class SchemaError : public std::invalid_argument {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path(path) {}
  std::string path;
};

CountDataset read_counts(std::istream& in, const std::string& source = "<stream>");
CountDataset load_sparse_counts(const std::filesystem::path& path);
void write_sparse_counts(std::ostream& out, const CountDataset& data);
void save_sparse_counts(const std::filesystem::path& path, const CountDataset& data);

/// Returns 0-based labels.
std::vector<int> read_labels(std::istream& in, const std::string& source = "<stream>");
std::vector<int> load_labels(const std::filesystem::path& path);
/// Writes 0-based labels as 1-indexed lines.
void write_labels(std::ostream& out, const std::vector<int>& labels);
void save_labels(const std::filesystem::path& path, const std::vector<int>& labels);

struct ReferenceCorpus {
  const char* name;
  int n;
  int d;
  int k;
};

/// Shapes of the document-term corpora commonly used with this method.
std::span<const ReferenceCorpus> reference_corpora();
std::optional<ReferenceCorpus> match_reference_corpus(Index n, Index d, int k);

/// N, D, NNZ, total count, number of label classes and any matching reference corpus.
json dataset_manifest(const CountDataset& data);
json synth_manifest(const SynthSpec& spec, const GeneratingModel& truth);

json fit_to_json(const FitResult& fit, bool include_timing, bool include_parameters = true);
json candidates_to_json(const CandidateModelSet& candidates, bool include_timing, bool include_parameters = true);

json report_to_json(const BenchmarkReport& report);
void write_report_csv(std::ostream& out, const BenchmarkReport& report);

/// Parses a benchmark grid. Relative dataset paths resolve against `base_dir`.
/// Returns the grid and, when present, the "repeats" field.
std::pair<BenchmarkGrid, std::optional<int>> parse_benchmark_grid(const json& config,
                                                                  const std::filesystem::path& base_dir);

}  // namespace mmclust
