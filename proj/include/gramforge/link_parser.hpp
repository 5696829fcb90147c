#pragma once

#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gramforge/grammar.hpp"

namespace gramforge {

struct Link {
  std::size_t left = 0;
  std::size_t right = 0;
  std::string left_owner;
  std::string right_owner;

  std::string label() const { return left_owner + "~" + right_owner; }
  friend bool operator==(const Link&, const Link&) = default;
};

struct Linkage {
  TokenSequence sentence;
  std::vector<Link> links;
  std::vector<std::string> owners;     // owner chosen for each word ("" for an unlinked terminator)
  std::vector<Disjunct> disjuncts;     // disjunct used by each word
};

// True when no two links cross: there is no (i, j), (k, l) with i < k < j < l.
inline bool is_planar(const std::vector<Link>& links) {
  for (const auto& a : links)
    for (const auto& b : links)
      if (a.left < b.left && b.left < a.right && a.right < b.right) return false;
  return true;
}

struct ParseOptions {
  std::size_t max_length = 32;
  bool require_connected = false;
};

struct ParseResult {
  std::optional<Linkage> linkage;
  std::string diagnosis;
  std::optional<std::size_t> failed_word;

  explicit operator bool() const noexcept { return linkage.has_value(); }
};

namespace detail {

struct OpenConnector {
  std::size_t position;
  std::string owner;  // owner of the word that opened it
  std::string label;  // owner it must reach
};

class LinkSearch {
 public:
  LinkSearch(const TokenSequence& s, const Grammar& g, const ParseOptions& opts)
      : sentence_(s), grammar_(g), options_(opts) {}

  ParseResult run() {
    ParseResult result;
    if (sentence_.size() > options_.max_length) {
      result.diagnosis = "sentence length " + std::to_string(sentence_.size()) +
                         " exceeds the configured cap of " + std::to_string(options_.max_length);
      return result;
    }
    choices_.resize(sentence_.size());
    for (std::size_t i = 0; i < sentence_.size(); ++i) {
      const auto& w = sentence_[i];
      for (const auto& owner : grammar_.owners_of(w))
        for (const auto& d : grammar_.rule(owner)->disjuncts) choices_[i].push_back({owner, &d});
      const bool final_terminator =
          grammar_.terminator() && w == *grammar_.terminator() && i + 1 == sentence_.size();
      if (final_terminator) choices_[i].push_back({"", &empty_});
      if (choices_[i].empty()) {
        result.failed_word = i;
        result.diagnosis = "unknown word '" + w + "' at position " + std::to_string(i);
        return result;
      }
    }
    owners_.resize(sentence_.size());
    used_.resize(sentence_.size());
    std::vector<OpenConnector> stack;
    if (search(0, stack)) {
      Linkage l;
      l.sentence = sentence_;
      l.links = links_;
      l.owners = owners_;
      for (auto* d : used_) l.disjuncts.push_back(*d);
      result.linkage = std::move(l);
      return result;
    }
    result.failed_word = std::min(deepest_, sentence_.size() - 1);
    result.diagnosis = "no linkage; first unsatisfiable word is '" + sentence_[*result.failed_word] +
                       "' at position " + std::to_string(*result.failed_word);
    return result;
  }

 private:
  struct Choice {
    std::string owner;
    const Disjunct* disjunct;
  };

  bool search(std::size_t j, std::vector<OpenConnector>& stack) {
    if (j == sentence_.size()) {
      if (!stack.empty()) {
        deepest_ = std::max(deepest_, stack.back().position);
        return false;
      }
      return !options_.require_connected || connected();
    }
    for (const auto& choice : choices_[j]) {
      auto next = stack;
      const auto left = choice.disjunct->side(Direction::left);
      bool ok = true;
      const std::size_t links_before = links_.size();
      for (const auto& c : left) {
        if (next.empty() || next.back().label != choice.owner || next.back().owner != c.label) {
          ok = false;
          break;
        }
        links_.push_back({next.back().position, j, next.back().owner, choice.owner});
        next.pop_back();
      }
      if (ok) {
        const auto right = choice.disjunct->side(Direction::right);
        for (auto it = right.rbegin(); it != right.rend(); ++it)
          next.push_back({j, choice.owner, it->label});
        owners_[j] = choice.owner;
        used_[j] = choice.disjunct;
        deepest_ = std::max(deepest_, j + 1 < sentence_.size() ? j + 1 : j);
        if (search(j + 1, next)) return true;
      } else {
        deepest_ = std::max(deepest_, j);
      }
      links_.resize(links_before);
    }
    return false;
  }

  bool connected() const {
    std::vector<std::size_t> parent(sentence_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& l : links_) parent[find(l.left)] = find(l.right);
    for (std::size_t i = 0; i < sentence_.size(); ++i) {
      const bool wall = owners_[i].empty();
      if (!wall && find(i) != find(0)) return false;
    }
    return true;
  }

  const TokenSequence& sentence_;
  const Grammar& grammar_;
  ParseOptions options_;
  Disjunct empty_{};
  std::vector<std::vector<Choice>> choices_;
  std::vector<std::string> owners_;
  std::vector<const Disjunct*> used_;
  std::vector<Link> links_;
  std::size_t deepest_ = 0;
};

}  // namespace detail

// Exhaustive search for a planar linkage in which every word uses exactly one
// of its disjuncts, connectors pair symmetrically (a left connector on B
// naming A with a right connector on A naming B), and each side's connectors
// reach words in order of increasing distance. Scanning left to right, open
// right connectors form a stack: planarity plus the nearness order force every
// left connector to close the most recently opened one.
inline ParseResult parse(const TokenSequence& sentence, const Grammar& grammar,
                         const ParseOptions& options = {}) {
  return detail::LinkSearch(sentence, grammar, options).run();
}

inline void print_linkage(std::ostream& out, const Linkage& l) {
  out << l.sentence.text() << "\n";
  for (const auto& link : l.links)
    out << "  " << l.sentence[link.left] << "(" << link.left << ") --" << link.label() << "-- "
        << l.sentence[link.right] << "(" << link.right << ")\n";
}

}  // namespace gramforge
