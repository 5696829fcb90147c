#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gramforge/error.hpp"

namespace gramforge {

// Reserved symbols. None of them may appear as a corpus token.
inline constexpr std::string_view kMaskSymbol = "[MASK]";
inline constexpr std::string_view kBlankSymbol = "_";
inline constexpr std::string_view kBoundarySymbol = "<s>";

inline bool is_reserved_symbol(std::string_view token) {
  return token == kMaskSymbol || token == kBlankSymbol || token == kBoundarySymbol;
}

inline std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// A sentence: a non-empty ordered list of lowercased tokens.
class TokenSequence {
 public:
  TokenSequence() = default;

  explicit TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    validate();
  }

  TokenSequence(std::initializer_list<std::string> tokens)
      : TokenSequence(std::vector<std::string>(tokens)) {}

  // Whitespace tokenization plus lowercasing.
  static TokenSequence from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(to_lower(tok));
    return TokenSequence(std::move(tokens));
  }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  auto begin() const noexcept { return tokens_.begin(); }
  auto end() const noexcept { return tokens_.end(); }

  TokenSequence reversed() const {
    return TokenSequence(std::vector<std::string>(tokens_.rbegin(), tokens_.rend()));
  }

  std::string text() const { return join(tokens_); }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
  friend auto operator<=>(const TokenSequence&, const TokenSequence&) = default;

 private:
  void validate() const {
    if (tokens_.empty()) throw DataError("token sequence must contain at least one token");
    for (const auto& t : tokens_) {
      if (t.empty()) throw DataError("empty token in sequence");
      if (is_reserved_symbol(t)) throw DataError("reserved symbol used as token: '" + t + "'");
    }
  }

  std::vector<std::string> tokens_;
};

using Corpus = std::vector<TokenSequence>;

// A sentence where some positions are hidden from the oracle, and one of the
// hidden positions is the one being predicted.
struct MaskedQuery {
  std::vector<std::optional<std::string>> tokens;  // nullopt = masked
  std::size_t target = 0;

  static MaskedQuery prefix_visible(const TokenSequence& s, std::size_t target) {
    MaskedQuery q;
    q.target = target;
    q.tokens.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i < target) q.tokens.emplace_back(s[i]);
      else q.tokens.emplace_back(std::nullopt);
    }
    return q;
  }

  static MaskedQuery suffix_visible(const TokenSequence& s, std::size_t target) {
    MaskedQuery q;
    q.target = target;
    q.tokens.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > target) q.tokens.emplace_back(s[i]);
      else q.tokens.emplace_back(std::nullopt);
    }
    return q;
  }

  bool is_masked(std::size_t i) const { return !tokens[i].has_value(); }

  void validate() const {
    if (target >= tokens.size())
      throw DataError("masked query target position out of bounds");
    if (tokens[target].has_value()) throw DataError("masked query target position is not masked");
  }

  // Wire form: masked positions rendered as the mask sentinel.
  std::vector<std::string> wire_tokens() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t ? *t : std::string(kMaskSymbol));
    return out;
  }

  std::string key() const {
    std::string k = std::to_string(target);
    for (const auto& t : tokens) {
      k += '\x1f';
      k += t ? *t : std::string(kMaskSymbol);
    }
    return k;
  }
};

}  // namespace gramforge
