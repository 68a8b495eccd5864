#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "roselm/numerics.hpp"

namespace roselm {

enum class TaskKind { Regression, Classification };

/// Inputs X (N x n) and targets T (N x m). Classification targets are one-hot rows
/// in {-1, +1} over class_count classes; class_labels holds the original label text.
struct Dataset {
  Matrix x;
  Matrix t;
  TaskKind task = TaskKind::Regression;
  Index class_count = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  std::vector<std::string> class_labels;

  Index size() const { return x.rows(); }
  Index input_dim() const { return x.cols(); }
  Index output_dim() const { return t.cols(); }

  /// Throws SchemaMismatch when row counts disagree or one-hot rows are malformed.
  void validate() const;

  /// Copy of the given rows, in the given order (repeats allowed).
  Dataset rows(std::span<const Index> indices) const;
  Dataset slice(Index begin, Index count) const;

  /// Class index per row (classification only).
  std::vector<Index> labels() const;
};

/// One-hot rows in {-1, +1}.
Matrix one_hot(std::span<const Index> labels, Index class_count);

/// Row-wise argmax; ties resolve to the smallest index.
std::vector<Index> argmax_rows(const Matrix& m);

/// Column reference in a delimited file: 0-based index, "last", or a header name.
struct ColumnRef {
  std::string token;
};

/// Column roles for load_delimited. Textual form (see parse):
///   "target=last;ignore=0,name;header"  or  "target=3;noheader"
struct Schema {
  TaskKind task = TaskKind::Regression;
  std::vector<ColumnRef> targets{ColumnRef{"last"}};
  std::vector<ColumnRef> ignore;
  std::optional<bool> header;  ///< unset: detected from the first row

  static Schema parse(std::string_view spec, TaskKind task);
};

/// Parses a comma- or whitespace-delimited numeric table. Classification target
/// columns hold categorical labels and are one-hot encoded (labels ordered
/// numerically when all are numbers, else lexicographically).
/// Throws ParseError (with line/column) or SchemaMismatch.
Dataset load_delimited(const std::filesystem::path& path, const Schema& schema);
Dataset parse_delimited(std::istream& in, const Schema& schema);

/// Writes features then targets (classification: one label column) with a header
/// row, in a form load_delimited reads back with the default schema.
void write_delimited(const Dataset& ds, std::ostream& out);
void write_delimited(const Dataset& ds, const std::filesystem::path& path);

/// Per-column affine map y = x * scale + offset.
struct AffineMap {
  Vector scale;
  Vector offset;

  Matrix apply(const Matrix& m) const;
  Matrix invert(const Matrix& m) const;
};

/// Min-max maps fitted on training rows. Regression maps inputs and outputs to
/// [0, 1]; classification maps inputs to [-1, 1] and leaves the one-hot targets.
struct NormalizationSpec {
  TaskKind task = TaskKind::Regression;
  double lo = 0.0;
  double hi = 1.0;
  AffineMap inputs;
  std::optional<AffineMap> outputs;

  static NormalizationSpec fit(const Dataset& train);
  /// Applies the maps unchanged; values outside the fitted range are not clipped.
  Dataset apply(const Dataset& ds) const;
  Matrix denormalize_outputs(const Matrix& t) const;
};

/// Fits on ds and returns (normalized ds, spec). Throws DegenerateColumn when a
/// regression target column is constant.
std::pair<Dataset, NormalizationSpec> normalize(const Dataset& ds);

/// Uniform random permutation under seed; first n_train rows train, rest test.
std::pair<Dataset, Dataset> split(const Dataset& ds, Index n_train, std::uint64_t seed);

struct ChunkRange {
  Index begin = 0;
  Index count = 0;
};

/// How a stream is cut into chunks: one-by-one, fixed size, or explicit sizes.
class ChunkPolicy {
 public:
  static ChunkPolicy one_by_one() { return ChunkPolicy(Index{1}); }
  static ChunkPolicy fixed(Index size);
  static ChunkPolicy sizes(std::vector<Index> sizes);
  /// "1", "20" or a comma list "3,2".
  static ChunkPolicy parse(std::string_view text);

  std::vector<ChunkRange> ranges(Index n) const;
  std::string to_string() const;

 private:
  explicit ChunkPolicy(std::variant<Index, std::vector<Index>> p) : policy_(std::move(p)) {}
  std::variant<Index, std::vector<Index>> policy_;
};

std::vector<Dataset> chunks(const Dataset& ds, const ChunkPolicy& policy);

struct SynthOptions {
  Index n_train = 4500;
  Index n_test = 1000;
  double x_lo = -3.0;
  double x_hi = 3.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

/// Samples y = x^2 + 3x + 2 (+ Gaussian noise) with x uniform over [x_lo, x_hi].
std::pair<Dataset, Dataset> synth_quadratic(const SynthOptions& opts);

}  // namespace roselm
