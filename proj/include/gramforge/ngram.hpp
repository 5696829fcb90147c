#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gramforge/oracle.hpp"

namespace gramforge {

// Add-k smoothed n-gram model used as a deterministic, offline oracle.
//
// Two count tables are kept: one over sentences read left to right and one
// over reversed sentences. A masked query is answered from whichever side
// of the target has the longer run of visible tokens adjacent to it; masked
// positions break the run, so the model only ever conditions on what a
// masked LM would actually see next to the blank. Sentence boundaries are a
// single marker that acts as start context and as the end-of-sentence
// outcome, and it is part of the outcome space the distribution normalizes
// over.
class NgramOracleModel final : public SequenceOracle {
 public:
  enum class Side { forward, backward };

  struct Table {
    std::uint64_t total = 0;
    std::unordered_map<std::string, std::uint64_t> counts;
  };

  NgramOracleModel(int order, double smoothing_k) : order_(order), k_(smoothing_k) {
    if (order < 1) throw ConfigError("n-gram order must be >= 1");
    if (!(smoothing_k > 0.0)) throw ConfigError("smoothing_k must be > 0");
  }

  static NgramOracleModel train(const Corpus& corpus, int order, double smoothing_k = 0.1) {
    if (corpus.empty()) throw DataError("cannot train an n-gram oracle on an empty corpus");
    NgramOracleModel model(order, smoothing_k);
    model.outcomes_.insert(std::string(kBoundarySymbol));
    for (const auto& sentence : corpus) {
      for (const auto& tok : sentence) model.outcomes_.insert(tok);
      model.count_sentence(sentence.tokens(), Side::forward);
      std::vector<std::string> rev(sentence.tokens().rbegin(), sentence.tokens().rend());
      model.count_sentence(rev, Side::backward);
    }
    return model;
  }

  int order() const noexcept { return order_; }
  double smoothing_k() const noexcept { return k_; }
  bool strict() const noexcept { return strict_; }
  void set_strict(bool strict) noexcept { strict_ = strict; }

  // Every token the model normalizes over, boundary marker included.
  const std::set<std::string>& outcome_space() const noexcept { return outcomes_; }

  // Corpus words only (boundary marker excluded).
  std::vector<std::string> vocabulary() const {
    std::vector<std::string> out;
    for (const auto& t : outcomes_)
      if (t != kBoundarySymbol) out.push_back(t);
    return out;
  }

  bool in_vocabulary(std::string_view token) const {
    return outcomes_.count(std::string(token)) > 0;
  }

  // Smoothed conditional of `token` after `context` (oldest first) on one side.
  // Backs off to the longest context suffix that was observed in training.
  double conditional(Side side, const std::vector<std::string>& context,
                     std::string_view token) const {
    const auto& tables = side == Side::forward ? forward_ : backward_;
    const std::size_t max_len = std::min<std::size_t>(context.size(), order_ - 1);
    const double v = static_cast<double>(outcomes_.size());
    for (std::size_t len = max_len + 1; len-- > 0;) {
      const auto key = context_key(context, context.size() - len, context.size());
      auto it = tables.find(key);
      if (it == tables.end() || it->second.total == 0) continue;
      const auto& table = it->second;
      std::uint64_t c = 0;
      if (auto ct = table.counts.find(std::string(token)); ct != table.counts.end()) c = ct->second;
      return (static_cast<double>(c) + k_) / (static_cast<double>(table.total) + k_ * v);
    }
    // Unreachable after training: the empty context always has counts.
    return 1.0 / v;
  }

  double masked_logprob(const MaskedQuery& query, std::string_view token) const override {
    query.validate();
    if (strict_ && !in_vocabulary(token)) throw OutOfVocabulary(std::string(token));
    const auto [side, context] = visible_context(query);
    return std::log(conditional(side, context, token));
  }

  // Which table answers the query and with what context (oldest first).
  std::pair<Side, std::vector<std::string>> visible_context(const MaskedQuery& query) const {
    const std::size_t window = static_cast<std::size_t>(order_ - 1);
    const auto t = query.target;
    const auto& toks = query.tokens;

    // Left run, nearest first.
    std::vector<std::string> left;
    bool left_boundary = true;
    for (std::size_t j = t; j-- > 0;) {
      if (!toks[j]) {
        left_boundary = false;
        break;
      }
      left.push_back(*toks[j]);
    }
    std::vector<std::string> right;
    bool right_boundary = true;
    for (std::size_t j = t + 1; j < toks.size(); ++j) {
      if (!toks[j]) {
        right_boundary = false;
        break;
      }
      right.push_back(*toks[j]);
    }
    auto clip = [window](std::vector<std::string> near_first, bool boundary) {
      if (boundary) near_first.emplace_back(kBoundarySymbol);
      if (near_first.size() > window) near_first.resize(window);
      std::reverse(near_first.begin(), near_first.end());
      return near_first;
    };
    auto lctx = clip(std::move(left), left_boundary);
    auto rctx = clip(std::move(right), right_boundary);
    auto real = [](const std::vector<std::string>& ctx) {
      return std::count_if(ctx.begin(), ctx.end(),
                           [](const std::string& s) { return s != kBoundarySymbol; });
    };
    const auto lreal = real(lctx), rreal = real(rctx);
    if (rreal > lreal || (rreal == lreal && rctx.size() > lctx.size()))
      return {Side::backward, std::move(rctx)};
    return {Side::forward, std::move(lctx)};
  }

  std::string id() const override {
    std::ostringstream out;
    out << "ngram(order=" << order_ << ",k=" << k_ << ",|V|=" << outcomes_.size() << ")";
    return out.str();
  }

  // Line-based text form. Header, outcome list, then one
  // "<side>\t<outcome>\t<context>\t<count>" line per observed event.
  void save(std::ostream& out) const {
    out << "gramforge-ngram 1\n";
    out << "order " << order_ << "\n";
    out.precision(17);
    out << "smoothing_k " << k_ << "\n";
    out << "outcomes " << outcomes_.size() << "\n";
    for (const auto& t : outcomes_) out << t << "\n";
    out << "counts\n";
    write_side(out, 'F', forward_);
    write_side(out, 'B', backward_);
  }

  static NgramOracleModel load(std::istream& in) {
    std::string line, word;
    auto expect = [&](std::string_view what) {
      if (!std::getline(in, line)) throw DataError("n-gram file truncated before " + std::string(what));
      std::istringstream ls(line);
      ls >> word;
      if (word != what) throw DataError("n-gram file: expected '" + std::string(what) + "', got '" + line + "'");
      std::string rest;
      std::getline(ls >> std::ws, rest);
      return rest;
    };
    if (expect("gramforge-ngram") != "1") throw DataError("unsupported n-gram file version");
    const int order = std::stoi(expect("order"));
    const double k = std::stod(expect("smoothing_k"));
    const std::size_t n = std::stoul(expect("outcomes"));
    NgramOracleModel model(order, k);
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) throw DataError("n-gram file truncated in outcome list");
      model.outcomes_.insert(line);
    }
    expect("counts");
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::size_t start = 0;
      for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos; start = pos + 1)
        fields.push_back(line.substr(start, pos - start));
      fields.push_back(line.substr(start));
      if (fields.size() != 4 || (fields[0] != "F" && fields[0] != "B"))
        throw DataError("n-gram file: malformed count line '" + line + "'");
      std::vector<std::string> ctx;
      std::istringstream cs(fields[2]);
      while (cs >> word) ctx.push_back(word);
      auto& tables = fields[0] == "F" ? model.forward_ : model.backward_;
      auto& table = tables[context_key(ctx, 0, ctx.size())];
      const auto c = std::stoull(fields[3]);
      table.counts[fields[1]] += c;
      table.total += c;
    }
    return model;
  }

 private:
  static std::string context_key(const std::vector<std::string>& ctx, std::size_t from,
                                 std::size_t to) {
    std::string key;
    for (std::size_t i = from; i < to; ++i) {
      if (i > from) key += '\x1f';
      key += ctx[i];
    }
    return key;
  }

  void count_sentence(const std::vector<std::string>& tokens, Side side) {
    auto& tables = side == Side::forward ? forward_ : backward_;
    std::vector<std::string> padded;
    padded.reserve(tokens.size() + 2);
    padded.emplace_back(kBoundarySymbol);
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    padded.emplace_back(kBoundarySymbol);
    for (std::size_t j = 1; j < padded.size(); ++j) {
      const std::size_t max_len = std::min<std::size_t>(j, order_ - 1);
      for (std::size_t len = 0; len <= max_len; ++len) {
        auto& table = tables[context_key(padded, j - len, j)];
        ++table.counts[padded[j]];
        ++table.total;
      }
    }
  }

  static void write_side(std::ostream& out, char tag,
                         const std::unordered_map<std::string, Table>& tables) {
    std::map<std::string, const Table*> sorted;
    for (const auto& [k, t] : tables) sorted.emplace(k, &t);
    for (const auto& [key, table] : sorted) {
      std::string ctx = key;
      std::replace(ctx.begin(), ctx.end(), '\x1f', ' ');
      std::map<std::string, std::uint64_t> counts(table->counts.begin(), table->counts.end());
      for (const auto& [tok, c] : counts) out << tag << '\t' << tok << '\t' << ctx << '\t' << c << '\n';
    }
  }

  int order_;
  double k_;
  bool strict_ = false;
  std::set<std::string> outcomes_;
  std::unordered_map<std::string, Table> forward_;
  std::unordered_map<std::string, Table> backward_;
};

}  // namespace gramforge
