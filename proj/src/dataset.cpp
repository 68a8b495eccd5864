#include "roselm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "roselm/errors.hpp"
#include "roselm/random.hpp"

namespace roselm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  if (line.find(',') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      const std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > start) cells.push_back(line.substr(start, i - start));
    }
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool is_missing(std::string_view cell) { return cell.empty() || cell == "?" || cell == "NA"; }

std::optional<Index> parse_index(std::string_view token) {
  Index value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || value < 0) return std::nullopt;
  return value;
}

Index resolve_column(const ColumnRef& ref, Index ncols, const std::vector<std::string>& header) {
  if (ref.token == "last") return ncols - 1;
  if (auto idx = parse_index(ref.token)) {
    if (*idx >= ncols) {
      throw SchemaMismatch("column " + ref.token + " out of range (" + std::to_string(ncols) + " columns)");
    }
    return *idx;
  }
  const auto it = std::find(header.begin(), header.end(), ref.token);
  if (it == header.end()) throw SchemaMismatch("no column named '" + ref.token + "'");
  return static_cast<Index>(it - header.begin());
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
  if (x.rows() != t.rows()) {
    throw SchemaMismatch("X has " + std::to_string(x.rows()) + " rows but T has " +
                         std::to_string(t.rows()));
  }
  if (task != TaskKind::Classification) return;
  if (class_count < 1 || t.cols() != class_count) {
    throw SchemaMismatch("classification targets must have class_count columns");
  }
  for (Index r = 0; r < t.rows(); ++r) {
    Index hot = 0;
    for (Index c = 0; c < t.cols(); ++c) {
      if (t(r, c) == 1.0) {
        ++hot;
      } else if (t(r, c) != -1.0) {
        throw SchemaMismatch("row " + std::to_string(r) + " is not a {-1,+1} one-hot row");
      }
    }
    if (hot != 1) throw SchemaMismatch("row " + std::to_string(r) + " is not one-hot");
  }
}

Dataset Dataset::rows(std::span<const Index> indices) const {
  Dataset out = *this;
  out.x.resize(static_cast<Index>(indices.size()), x.cols());
  out.t.resize(static_cast<Index>(indices.size()), t.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.x.row(static_cast<Index>(i)) = x.row(indices[i]);
    out.t.row(static_cast<Index>(i)) = t.row(indices[i]);
  }
  return out;
}

Dataset Dataset::slice(Index begin, Index count) const {
  if (begin < 0 || count < 0 || begin + count > size()) {
    throw InvalidArgument("slice out of range");
  }
  Dataset out = *this;
  out.x = x.middleRows(begin, count);
  out.t = t.middleRows(begin, count);
  return out;
}

std::vector<Index> Dataset::labels() const {
  if (task != TaskKind::Classification) throw InvalidArgument("labels() on a regression dataset");
  return argmax_rows(t);
}

Matrix one_hot(std::span<const Index> labels, Index class_count) {
  Matrix out = Matrix::Constant(static_cast<Index>(labels.size()), class_count, -1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count) throw InvalidArgument("label out of range");
    out(static_cast<Index>(i), labels[i]) = 1.0;
  }
  return out;
}

std::vector<Index> argmax_rows(const Matrix& m) {
  std::vector<Index> out(static_cast<std::size_t>(m.rows()), 0);
  for (Index r = 0; r < m.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < m.cols(); ++c) {
      if (m(r, c) > m(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loading

Schema Schema::parse(std::string_view spec, TaskKind task) {
  Schema schema;
  schema.task = task;
  std::string text(spec);
  std::istringstream parts(text);
  std::string part;
  while (std::getline(parts, part, ';')) {
    const auto entry = trim(part);
    if (entry.empty()) continue;
    if (entry == "header") {
      schema.header = true;
      continue;
    }
    if (entry == "noheader") {
      schema.header = false;
      continue;
    }
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) throw SchemaMismatch("bad schema entry '" + std::string(entry) + "'");
    const auto key = trim(entry.substr(0, eq));
    std::vector<ColumnRef> refs;
    std::istringstream cols{std::string(entry.substr(eq + 1))};
    std::string col;
    while (std::getline(cols, col, ',')) {
      const auto c = trim(col);
      if (!c.empty()) refs.push_back(ColumnRef{std::string(c)});
    }
    if (key == "target") {
      if (refs.empty()) throw SchemaMismatch("schema target list is empty");
      schema.targets = std::move(refs);
    } else if (key == "ignore") {
      schema.ignore = std::move(refs);
    } else {
      throw SchemaMismatch("unknown schema key '" + std::string(key) + "'");
    }
  }
  return schema;
}

Dataset parse_delimited(std::istream& in, const Schema& schema) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::vector<std::string> cells;
    for (auto c : split_cells(body)) cells.emplace_back(c);
    if (!rows.empty() && cells.size() != rows.front().size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(rows.front().size()) + " columns, found " +
                           std::to_string(cells.size()),
                       line_no, 0);
    }
    rows.push_back(std::move(cells));
    line_numbers.push_back(line_no);
  }
  if (rows.empty()) throw ParseError("no data rows", 0, 0);
  const auto ncols = static_cast<Index>(rows.front().size());

  const bool named_refs = std::any_of(schema.targets.begin(), schema.targets.end(), [](const ColumnRef& r) {
    return r.token != "last" && !parse_index(r.token);
  }) || std::any_of(schema.ignore.begin(), schema.ignore.end(), [](const ColumnRef& r) {
    return r.token != "last" && !parse_index(r.token);
  });

  bool has_header = schema.header.value_or(false);
  if (!schema.header) {
    if (named_refs) {
      has_header = true;
    } else {
      // Header iff some non-target cell of the first row is not numeric.
      std::vector<std::string> none;
      std::vector<bool> is_target(static_cast<std::size_t>(ncols), false);
      for (const auto& r : schema.targets) is_target[static_cast<std::size_t>(resolve_column(r, ncols, none))] = true;
      for (Index c = 0; c < ncols; ++c) {
        const auto& cell = rows.front()[static_cast<std::size_t>(c)];
        const bool check = schema.task == TaskKind::Regression || !is_target[static_cast<std::size_t>(c)];
        if (check && !is_missing(cell) && !parse_number(cell)) has_header = true;
      }
    }
  }

  std::vector<std::string> header;
  if (has_header) {
    header = rows.front();
    rows.erase(rows.begin());
    line_numbers.erase(line_numbers.begin());
  }
  if (rows.empty()) throw ParseError("no data rows after header", 0, 0);

  std::vector<Index> target_cols;
  for (const auto& r : schema.targets) target_cols.push_back(resolve_column(r, ncols, header));
  std::vector<bool> skip(static_cast<std::size_t>(ncols), false);
  for (const auto& r : schema.ignore) skip[static_cast<std::size_t>(resolve_column(r, ncols, header))] = true;
  for (Index c : target_cols) {
    if (skip[static_cast<std::size_t>(c)]) throw SchemaMismatch("column is both target and ignored");
    skip[static_cast<std::size_t>(c)] = true;
  }
  std::vector<Index> feature_cols;
  for (Index c = 0; c < ncols; ++c) {
    if (!skip[static_cast<std::size_t>(c)]) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw SchemaMismatch("schema leaves no feature columns");
  if (schema.task == TaskKind::Classification && target_cols.size() != 1) {
    throw SchemaMismatch("classification needs exactly one target column");
  }

  const auto n = static_cast<Index>(rows.size());
  Dataset ds;
  ds.task = schema.task;
  ds.x.resize(n, static_cast<Index>(feature_cols.size()));
  auto name_of = [&](Index c) {
    return has_header ? header[static_cast<std::size_t>(c)] : "x" + std::to_string(c);
  };
  for (Index c : feature_cols) ds.feature_names.push_back(name_of(c));
  for (Index c : target_cols) ds.target_names.push_back(name_of(c));

  auto numeric_cell = [&](Index r, Index c) {
    const auto& cell = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    const auto line_at = line_numbers[static_cast<std::size_t>(r)];
    if (is_missing(cell)) {
      throw ParseError("line " + std::to_string(line_at) + ", column " + std::to_string(c + 1) +
                           ": missing value",
                       line_at, static_cast<std::size_t>(c + 1));
    }
    const auto v = parse_number(cell);
    if (!v) {
      throw ParseError("line " + std::to_string(line_at) + ", column " + std::to_string(c + 1) +
                           ": non-numeric cell '" + cell + "'",
                       line_at, static_cast<std::size_t>(c + 1));
    }
    return *v;
  };

  for (Index r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      ds.x(r, static_cast<Index>(j)) = numeric_cell(r, feature_cols[j]);
    }
  }

  if (schema.task == TaskKind::Regression) {
    ds.t.resize(n, static_cast<Index>(target_cols.size()));
    for (Index r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < target_cols.size(); ++j) {
        ds.t(r, static_cast<Index>(j)) = numeric_cell(r, target_cols[j]);
      }
    }
  } else {
    const Index tc = target_cols.front();
    std::vector<std::string> raw;
    raw.reserve(static_cast<std::size_t>(n));
    for (Index r = 0; r < n; ++r) {
      const auto& cell = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(tc)];
      if (is_missing(cell)) {
        const auto line_at = line_numbers[static_cast<std::size_t>(r)];
        throw ParseError("line " + std::to_string(line_at) + ": missing class label", line_at,
                         static_cast<std::size_t>(tc + 1));
      }
      raw.push_back(cell);
    }
    std::vector<std::string> labels = raw;
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const bool numeric = std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
      return parse_number(s).has_value();
    });
    if (numeric) {
      std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
        return *parse_number(a) < *parse_number(b);
      });
    }
    std::map<std::string, Index> index_of;
    for (std::size_t i = 0; i < labels.size(); ++i) index_of[labels[i]] = static_cast<Index>(i);
    std::vector<Index> idx;
    idx.reserve(raw.size());
    for (const auto& s : raw) idx.push_back(index_of.at(s));
    ds.class_count = static_cast<Index>(labels.size());
    ds.class_labels = std::move(labels);
    ds.t = one_hot(idx, ds.class_count);
  }
  ds.validate();
  return ds;
}

Dataset load_delimited(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0, 0);
  return parse_delimited(in, schema);
}

void write_delimited(const Dataset& ds, std::ostream& out) {
  std::vector<std::string> names;
  for (Index c = 0; c < ds.input_dim(); ++c) {
    names.push_back(static_cast<std::size_t>(c) < ds.feature_names.size() ? ds.feature_names[static_cast<std::size_t>(c)]
                                                                            : "x" + std::to_string(c));
  }
  if (ds.task == TaskKind::Classification) {
    names.push_back(ds.target_names.empty() ? "class" : ds.target_names.front());
  } else {
    for (Index c = 0; c < ds.output_dim(); ++c) {
      names.push_back(static_cast<std::size_t>(c) < ds.target_names.size() ? ds.target_names[static_cast<std::size_t>(c)]
                                                                             : "y" + std::to_string(c));
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';

  const auto labels = ds.task == TaskKind::Classification ? ds.labels() : std::vector<Index>{};
  for (Index r = 0; r < ds.size(); ++r) {
    for (Index c = 0; c < ds.input_dim(); ++c) out << (c ? "," : "") << format_number(ds.x(r, c));
    if (ds.task == TaskKind::Classification) {
      const auto k = labels[static_cast<std::size_t>(r)];
      out << ',' << (static_cast<std::size_t>(k) < ds.class_labels.size() ? ds.class_labels[static_cast<std::size_t>(k)]
                                                                           : std::to_string(k));
    } else {
      for (Index c = 0; c < ds.output_dim(); ++c) out << ',' << format_number(ds.t(r, c));
    }
    out << '\n';
  }
}

void write_delimited(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_delimited(ds, out);
}

// ---------------------------------------------------------------------------
// Normalization

Matrix AffineMap::apply(const Matrix& m) const {
  if (m.cols() != scale.size()) throw DimensionMismatch("affine map column count mismatch");
  return (m.array().rowwise() * scale.transpose().array()).rowwise() + offset.transpose().array();
}

Matrix AffineMap::invert(const Matrix& m) const {
  if (m.cols() != scale.size()) throw DimensionMismatch("affine map column count mismatch");
  return (m.array().rowwise() - offset.transpose().array()).rowwise() / scale.transpose().array();
}

namespace {

AffineMap fit_minmax(const Matrix& m, double lo, double hi, bool constant_is_error, const std::vector<std::string>& names) {
  AffineMap map{Vector(m.cols()), Vector(m.cols())};
  for (Index c = 0; c < m.cols(); ++c) {
    const double mn = m.col(c).minCoeff();
    const double mx = m.col(c).maxCoeff();
    if (mx > mn) {
      map.scale(c) = (hi - lo) / (mx - mn);
      map.offset(c) = lo - mn * map.scale(c);
    } else if (constant_is_error) {
      const auto name = static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)] : std::to_string(c);
      throw DegenerateColumn("target column '" + name + "' is constant over the training rows");
    } else {
      // Constant input: shift to the middle of the range.
      map.scale(c) = 1.0;
      map.offset(c) = 0.5 * (lo + hi) - mn;
    }
  }
  return map;
}

}  // namespace

NormalizationSpec NormalizationSpec::fit(const Dataset& train) {
  if (train.size() == 0) throw InvalidArgument("cannot fit normalization on an empty dataset");
  NormalizationSpec spec;
  spec.task = train.task;
  if (train.task == TaskKind::Regression) {
    spec.lo = 0.0;
    spec.hi = 1.0;
    spec.inputs = fit_minmax(train.x, 0.0, 1.0, false, train.feature_names);
    spec.outputs = fit_minmax(train.t, 0.0, 1.0, true, train.target_names);
  } else {
    spec.lo = -1.0;
    spec.hi = 1.0;
    spec.inputs = fit_minmax(train.x, -1.0, 1.0, false, train.feature_names);
  }
  return spec;
}

Dataset NormalizationSpec::apply(const Dataset& ds) const {
  Dataset out = ds;
  out.x = inputs.apply(ds.x);
  if (outputs) out.t = outputs->apply(ds.t);
  return out;
}

Matrix NormalizationSpec::denormalize_outputs(const Matrix& t) const {
  return outputs ? outputs->invert(t) : t;
}

std::pair<Dataset, NormalizationSpec> normalize(const Dataset& ds) {
  auto spec = NormalizationSpec::fit(ds);
  return {spec.apply(ds), std::move(spec)};
}

// ---------------------------------------------------------------------------
// Splitting and chunking

std::pair<Dataset, Dataset> split(const Dataset& ds, Index n_train, std::uint64_t seed) {
  if (n_train < 0 || n_train >= ds.size()) {
    throw InvalidArgument("split: n_train must be in [0, " + std::to_string(ds.size()) + ")");
  }
  std::vector<Index> perm(static_cast<std::size_t>(ds.size()));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto mid = perm.begin() + n_train;
  return {ds.rows(std::span<const Index>(perm.begin(), mid)), ds.rows(std::span<const Index>(mid, perm.end()))};
}

ChunkPolicy ChunkPolicy::fixed(Index size) {
  if (size < 1) throw InvalidArgument("chunk size must be positive");
  return ChunkPolicy(size);
}

ChunkPolicy ChunkPolicy::sizes(std::vector<Index> sizes) {
  if (sizes.empty()) throw InvalidArgument("chunk size list is empty");
  for (Index s : sizes) {
    if (s < 1) throw InvalidArgument("chunk sizes must be positive");
  }
  return ChunkPolicy(std::move(sizes));
}

ChunkPolicy ChunkPolicy::parse(std::string_view text) {
  const auto body = trim(text);
  std::vector<Index> values;
  std::istringstream in{std::string(body)};
  std::string tok;
  while (std::getline(in, tok, ',')) {
    const auto v = parse_index(trim(tok));
    if (!v || *v < 1) throw InvalidArgument("bad chunk policy '" + std::string(text) + "'");
    values.push_back(*v);
  }
  if (values.empty()) throw InvalidArgument("bad chunk policy '" + std::string(text) + "'");
  if (body.find(',') == std::string_view::npos) return fixed(values.front());
  return sizes(std::move(values));
}

std::vector<ChunkRange> ChunkPolicy::ranges(Index n) const {
  std::vector<ChunkRange> out;
  if (const auto* fixed_size = std::get_if<Index>(&policy_)) {
    for (Index b = 0; b < n; b += *fixed_size) out.push_back({b, std::min(*fixed_size, n - b)});
    return out;
  }
  const auto& list = std::get<std::vector<Index>>(policy_);
  const Index total = std::accumulate(list.begin(), list.end(), Index{0});
  if (total > n) throw InvalidArgument("chunk sizes sum to more than the dataset size");
  Index b = 0;
  for (Index s : list) {
    out.push_back({b, s});
    b += s;
  }
  return out;
}

std::string ChunkPolicy::to_string() const {
  if (const auto* fixed_size = std::get_if<Index>(&policy_)) return std::to_string(*fixed_size);
  std::string out;
  for (Index s : std::get<std::vector<Index>>(policy_)) out += (out.empty() ? "" : ",") + std::to_string(s);
  return out;
}

std::vector<Dataset> chunks(const Dataset& ds, const ChunkPolicy& policy) {
  std::vector<Dataset> out;
  for (const auto& r : policy.ranges(ds.size())) out.push_back(ds.slice(r.begin, r.count));
  return out;
}

std::pair<Dataset, Dataset> synth_quadratic(const SynthOptions& opts) {
  if (opts.n_train < 1 || opts.n_test < 1) throw InvalidArgument("synth_quadratic: counts must be >= 1");
  if (!(opts.x_hi > opts.x_lo)) throw InvalidArgument("synth_quadratic: empty x range");
  if (opts.noise_sd < 0.0) throw InvalidArgument("synth_quadratic: noise_sd must be >= 0");
  Rng rng(opts.seed);
  std::uniform_real_distribution<double> ux(opts.x_lo, opts.x_hi);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto make = [&](Index n) {
    Dataset ds;
    ds.task = TaskKind::Regression;
    ds.x.resize(n, 1);
    ds.t.resize(n, 1);
    ds.feature_names = {"x"};
    ds.target_names = {"y"};
    for (Index i = 0; i < n; ++i) {
      const double x = ux(rng);
      double y = x * x + 3.0 * x + 2.0;
      if (opts.noise_sd > 0.0) y += opts.noise_sd * noise(rng);
      ds.x(i, 0) = x;
      ds.t(i, 0) = y;
    }
    return ds;
  };
  auto train = make(opts.n_train);
  auto test = make(opts.n_test);
  return {std::move(train), std::move(test)};
}

}  // namespace roselm
