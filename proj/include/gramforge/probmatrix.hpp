#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "gramforge/oracle.hpp"
#include "gramforge/parallel.hpp"
#include "gramforge/sense_model.hpp"
#include "gramforge/vecmath.hpp"

namespace gramforge {

struct Occurrence {
  std::size_t sentence_id = 0;
  std::size_t position = 0;
  std::string word;

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

// A corpus sentence with exactly one position replaced by the blank. Several
// corpus occurrences can collapse onto the same blanked sentence; all of them
// are kept in `occurrences` (the first one is the source).
struct BlankedSentence {
  std::size_t source_sentence_id = 0;
  std::vector<std::string> tokens;
  std::size_t blank_position = 0;
  std::vector<Occurrence> occurrences;

  std::string id() const { return join(tokens); }

  TokenSequence fill(const std::string& word) const {
    auto filled = tokens;
    filled[blank_position] = word;
    return TokenSequence(std::move(filled));
  }
};

// One row per (sentence, position), identical blanked sentences merged, in
// first-seen order.
inline std::vector<BlankedSentence> expand_corpus(const Corpus& corpus) {
  if (corpus.empty()) throw DataError("cannot expand an empty corpus");
  std::vector<BlankedSentence> rows;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& sentence = corpus[s];
    for (std::size_t p = 0; p < sentence.size(); ++p) {
      BlankedSentence row;
      row.source_sentence_id = s;
      row.tokens = sentence.tokens();
      row.tokens[p] = std::string(kBlankSymbol);
      row.blank_position = p;
      Occurrence occ{s, p, sentence[p]};
      auto [it, inserted] = index.emplace(row.id(), rows.size());
      if (inserted) {
        row.occurrences.push_back(std::move(occ));
        rows.push_back(std::move(row));
      } else {
        rows[it->second].occurrences.push_back(std::move(occ));
      }
    }
  }
  return rows;
}

// Sorted distinct corpus words.
inline std::vector<std::string> corpus_vocabulary(const Corpus& corpus) {
  std::set<std::string> words;
  for (const auto& s : corpus) words.insert(s.begin(), s.end());
  return {words.begin(), words.end()};
}

// Dense column-major matrix with string identifiers on both axes. Shared
// storage layer for ProbMatrix and SenseMatrix (and their file formats).
struct LabeledMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> column_ids;
  std::vector<double> cells;  // column-major: cells[j * rows + i]

  std::size_t rows() const noexcept { return row_ids.size(); }
  std::size_t cols() const noexcept { return column_ids.size(); }
  double at(std::size_t i, std::size_t j) const { return cells[j * rows() + i]; }
  double& at(std::size_t i, std::size_t j) { return cells[j * rows() + i]; }
  std::span<const double> column(std::size_t j) const {
    return {cells.data() + j * rows(), rows()};
  }
  std::vector<double> row(std::size_t i) const {
    std::vector<double> out(cols());
    for (std::size_t j = 0; j < cols(); ++j) out[j] = at(i, j);
    return out;
  }
};

// Word x blanked-sentence matrix of combined log-probabilities.
class ProbMatrix {
 public:
  ProbMatrix() = default;
  ProbMatrix(std::vector<BlankedSentence> rows, std::vector<std::string> columns,
             std::vector<double> cells)
      : rows_(std::move(rows)) {
    data_.column_ids = std::move(columns);
    for (const auto& r : rows_) data_.row_ids.push_back(r.id());
    data_.cells = std::move(cells);
    if (data_.cells.size() != data_.rows() * data_.cols())
      throw DataError("matrix cell count does not match rows x columns");
    for (double v : data_.cells)
      if (!std::isfinite(v)) throw DataError("probability matrix cell is not finite");
    for (std::size_t j = 0; j < data_.cols(); ++j) column_index_.emplace(data_.column_ids[j], j);
  }

  const std::vector<BlankedSentence>& rows() const noexcept { return rows_; }
  const std::vector<std::string>& columns() const noexcept { return data_.column_ids; }
  std::size_t row_count() const noexcept { return data_.rows(); }
  std::size_t column_count() const noexcept { return data_.cols(); }
  double at(std::size_t i, std::size_t j) const { return data_.at(i, j); }
  std::span<const double> column(std::size_t j) const { return data_.column(j); }
  std::vector<double> row(std::size_t i) const { return data_.row(i); }
  const LabeledMatrix& data() const noexcept { return data_; }

  std::optional<std::size_t> column_of(const std::string& word) const {
    auto it = column_index_.find(word);
    if (it == column_index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<BlankedSentence> rows_;
  LabeledMatrix data_;
  std::unordered_map<std::string, std::size_t> column_index_;
};

// Thrown when the oracle fails during a fill. Carries what was computed so
// far (unfilled cells are NaN) so the caller can checkpoint.
class MatrixFillError : public OracleUnavailable {
 public:
  MatrixFillError(const std::string& what, LabeledMatrix partial, std::size_t completed)
      : OracleUnavailable(what), partial_(std::move(partial)), completed_(completed) {}
  const LabeledMatrix& partial() const noexcept { return partial_; }
  std::size_t completed() const noexcept { return completed_; }

 private:
  LabeledMatrix partial_;
  std::size_t completed_;
};

struct FillOptions {
  std::size_t jobs = 1;
};

// Cell (i, j) = combined log-probability of row i with the blank replaced by
// word j.
inline ProbMatrix fill_matrix(std::vector<BlankedSentence> rows, std::vector<std::string> vocabulary,
                              const SequenceOracle& oracle, const FillOptions& options = {}) {
  if (rows.empty() || vocabulary.empty()) throw DataError("fill_matrix needs rows and vocabulary");
  LabeledMatrix data;
  for (const auto& r : rows) data.row_ids.push_back(r.id());
  data.column_ids = vocabulary;
  data.cells.assign(rows.size() * vocabulary.size(), std::numeric_limits<double>::quiet_NaN());
  std::atomic<std::size_t> completed{0};
  const std::size_t n_rows = rows.size();
  try {
    parallel_for(data.cells.size(), options.jobs, [&](std::size_t cell) {
      const std::size_t j = cell / n_rows, i = cell % n_rows;
      data.cells[cell] = sequence_score(oracle, rows[i].fill(vocabulary[j])).combined_logprob;
      ++completed;
    });
  } catch (const OracleUnavailable& e) {
    throw MatrixFillError(std::string("matrix fill aborted: ") + e.what(), std::move(data),
                          completed.load());
  }
  return ProbMatrix(std::move(rows), std::move(vocabulary), std::move(data.cells));
}

struct SenseId {
  std::string word;
  std::size_t sense = 0;

  std::string label() const { return word + "#" + std::to_string(sense); }
  friend auto operator<=>(const SenseId&, const SenseId&) = default;
};

// Rows as in the parent ProbMatrix, one column per word sense. For a word with
// several senses, each row's value sits in exactly one of its sense columns;
// the others hold kEmptyCell.
class SenseMatrix {
 public:
  SenseMatrix() = default;
  SenseMatrix(std::vector<std::string> row_ids, std::vector<SenseId> columns, std::vector<double> cells)
      : senses_(std::move(columns)) {
    data_.row_ids = std::move(row_ids);
    for (const auto& s : senses_) data_.column_ids.push_back(s.label());
    data_.cells = std::move(cells);
    if (data_.cells.size() != data_.rows() * data_.cols())
      throw DataError("sense matrix cell count does not match rows x columns");
  }

  const std::vector<SenseId>& senses() const noexcept { return senses_; }
  std::size_t row_count() const noexcept { return data_.rows(); }
  std::size_t column_count() const noexcept { return data_.cols(); }
  double at(std::size_t i, std::size_t j) const { return data_.at(i, j); }
  std::span<const double> column(std::size_t j) const { return data_.column(j); }
  const LabeledMatrix& data() const noexcept { return data_; }

 private:
  std::vector<SenseId> senses_;
  LabeledMatrix data_;
};

// Index of the centroid closest (cosine) to `direction`; ties go to the lower
// index.
inline std::size_t nearest_centroid(std::span<const double> direction,
                                    const std::vector<std::vector<double>>& centroids) {
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double sim = dot(direction, centroids[c]);
    if (sim > best_sim) {
      best_sim = sim;
      best = c;
    }
  }
  return best;
}

// Re-distributes each polysemous word's column over its senses: row i goes to
// the sense whose centroid is nearest the unit-normalized row M_i. Words with
// no entry in `senses` (or a single centroid) keep their column unchanged.
// Every word listed in `polysemous` must have a model.
inline SenseMatrix build_sense_matrix(const ProbMatrix& m, const SenseInventory& senses,
                                      std::span<const std::string> polysemous = {}) {
  for (const auto& w : polysemous)
    if (!senses.count(w)) throw DataError("missing sense model for polysemous word '" + w + "'");

  std::vector<SenseId> columns;
  std::vector<std::size_t> source_column;
  for (std::size_t j = 0; j < m.column_count(); ++j) {
    const auto& word = m.columns()[j];
    auto it = senses.find(word);
    const std::size_t n = it == senses.end() ? 1 : std::max<std::size_t>(1, it->second.sense_count());
    if (it != senses.end() && it->second.sense_count() > 1) {
      for (const auto& c : it->second.centroids)
        if (c.size() != m.column_count())
          throw DataError("sense centroid dimension mismatch for '" + word + "'");
    }
    for (std::size_t s = 0; s < n; ++s) {
      columns.push_back({word, s});
      source_column.push_back(j);
    }
  }

  const std::size_t rows = m.row_count();
  std::vector<double> cells(rows * columns.size(), kEmptyCell);
  std::vector<std::vector<double>> directions(rows);
  for (std::size_t i = 0; i < rows; ++i) directions[i] = probability_direction(m.row(i));

  std::size_t out_col = 0;
  while (out_col < columns.size()) {
    const std::size_t j = source_column[out_col];
    const auto& word = columns[out_col].word;
    auto it = senses.find(word);
    if (it == senses.end() || it->second.sense_count() <= 1) {
      for (std::size_t i = 0; i < rows; ++i) cells[out_col * rows + i] = m.at(i, j);
      ++out_col;
      continue;
    }
    const auto& centroids = it->second.centroids;
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t s = nearest_centroid(directions[i], centroids);
      cells[(out_col + s) * rows + i] = m.at(i, j);
    }
    out_col += centroids.size();
  }
  std::vector<std::string> row_ids = m.data().row_ids;
  return SenseMatrix(std::move(row_ids), std::move(columns), std::move(cells));
}

// --- persistence -----------------------------------------------------------

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos && !s.empty()) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("binary matrix truncated");
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
  const auto n = read_pod<std::uint32_t>(in);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw DataError("binary matrix truncated");
  return s;
}

inline constexpr char kMatrixMagic[4] = {'G', 'F', 'M', 'X'};
inline constexpr std::uint32_t kMatrixVersion = 1;

}  // namespace detail

// CSV: header "row,<column ids...>", then one line per row: row id followed by
// values. Empty cells are empty fields.
inline void write_csv(std::ostream& out, const LabeledMatrix& m) {
  out << "row";
  for (const auto& c : m.column_ids) out << ',' << detail::csv_field(c);
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << detail::csv_field(m.row_ids[i]);
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out << ',';
      const double v = m.at(i, j);
      if (!is_empty_cell(v)) out << detail::format_double(v);
    }
    out << '\n';
  }
}

inline LabeledMatrix read_csv(std::istream& in) {
  LabeledMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw DataError("matrix CSV is empty");
  auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "row") throw DataError("matrix CSV header must start with 'row'");
  m.column_ids.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != m.column_ids.size() + 1)
      throw DataError("matrix CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(m.column_ids.size() + 1));
    m.row_ids.push_back(fields[0]);
    std::vector<double> values;
    for (std::size_t j = 1; j < fields.size(); ++j)
      values.push_back(fields[j].empty() ? kEmptyCell : std::stod(fields[j]));
    rows.push_back(std::move(values));
  }
  m.cells.resize(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m.at(i, j) = rows[i][j];
  return m;
}

// Binary: magic "GFMX", u32 version, u64 rows, u64 cols, column ids, row ids
// (u32 length + bytes each), then rows*cols doubles column-major. Empty cells
// are NaN.
inline void write_binary(std::ostream& out, const LabeledMatrix& m) {
  out.write(detail::kMatrixMagic, 4);
  detail::write_pod<std::uint32_t>(out, detail::kMatrixVersion);
  detail::write_pod<std::uint64_t>(out, m.rows());
  detail::write_pod<std::uint64_t>(out, m.cols());
  for (const auto& c : m.column_ids) detail::write_string(out, c);
  for (const auto& r : m.row_ids) detail::write_string(out, r);
  out.write(reinterpret_cast<const char*>(m.cells.data()),
            static_cast<std::streamsize>(m.cells.size() * sizeof(double)));
}

inline LabeledMatrix read_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, detail::kMatrixMagic, 4) != 0)
    throw DataError("not a gramforge binary matrix");
  if (detail::read_pod<std::uint32_t>(in) != detail::kMatrixVersion)
    throw DataError("unsupported binary matrix version");
  const auto rows = detail::read_pod<std::uint64_t>(in);
  const auto cols = detail::read_pod<std::uint64_t>(in);
  LabeledMatrix m;
  for (std::uint64_t j = 0; j < cols; ++j) m.column_ids.push_back(detail::read_string(in));
  for (std::uint64_t i = 0; i < rows; ++i) m.row_ids.push_back(detail::read_string(in));
  m.cells.resize(rows * cols);
  if (!in.read(reinterpret_cast<char*>(m.cells.data()),
               static_cast<std::streamsize>(m.cells.size() * sizeof(double))))
    throw DataError("binary matrix truncated");
  return m;
}

// Rebuilds a ProbMatrix from stored cells plus the corpus it was computed
// from (the file keeps only row ids; occurrences come from re-expansion).
inline ProbMatrix attach_rows(const LabeledMatrix& stored, const Corpus& corpus) {
  auto rows = expand_corpus(corpus);
  if (rows.size() != stored.rows()) throw DataError("stored matrix row count does not match corpus");
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].id() != stored.row_ids[i])
      throw DataError("stored matrix row " + std::to_string(i) + " does not match corpus expansion");
  return ProbMatrix(std::move(rows), stored.column_ids, stored.cells);
}

}  // namespace gramforge
