#pragma once

#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gramforge/tokens.hpp"

namespace gramforge {

// Natural-log scores of a sentence. combined is the log of the geometric mean
// of the two directional probabilities.
struct SequenceScore {
  double forward_logprob = 0.0;
  double backward_logprob = 0.0;
  double combined_logprob = 0.0;
};

// Anything that can answer "how likely is this token at the masked target,
// given the visible positions". Implementations must tolerate concurrent
// const calls.
class SequenceOracle {
 public:
  virtual ~SequenceOracle() = default;

  virtual double masked_logprob(const MaskedQuery& query, std::string_view token) const = 0;

  // Several candidates at one query. Remote oracles override this to batch.
  virtual std::vector<double> masked_logprobs(const MaskedQuery& query,
                                              std::span<const std::string> candidates) const {
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) out.push_back(masked_logprob(query, c));
    return out;
  }

  virtual std::string id() const = 0;
};

// Sum over i of log P(w_i | w_0..w_{i-1}); positions i..N-1 are masked when
// asking for factor i.
inline double forward_logprob(const SequenceOracle& oracle, const TokenSequence& s) {
  if (s.empty()) throw DataError("cannot score an empty sentence");
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    total += oracle.masked_logprob(MaskedQuery::prefix_visible(s, i), s[i]);
  return total;
}

// Mirror image: factor i conditions on w_{i+1}..w_{N-1}, visiting i from the end.
inline double backward_logprob(const SequenceOracle& oracle, const TokenSequence& s) {
  if (s.empty()) throw DataError("cannot score an empty sentence");
  double total = 0.0;
  for (std::size_t i = s.size(); i-- > 0;)
    total += oracle.masked_logprob(MaskedQuery::suffix_visible(s, i), s[i]);
  return total;
}

inline double combine_logprobs(double forward, double backward) {
  return (forward + backward) / 2.0;
}

inline SequenceScore sequence_score(const SequenceOracle& oracle, const TokenSequence& s) {
  SequenceScore score;
  score.forward_logprob = forward_logprob(oracle, s);
  score.backward_logprob = backward_logprob(oracle, s);
  score.combined_logprob = combine_logprobs(score.forward_logprob, score.backward_logprob);
  return score;
}

// Memoizes (query, candidate) answers of a wrapped oracle.
class CachingOracle final : public SequenceOracle {
 public:
  explicit CachingOracle(std::shared_ptr<const SequenceOracle> inner) : inner_(std::move(inner)) {}

  double masked_logprob(const MaskedQuery& query, std::string_view token) const override {
    std::string key = query.key();
    key += '\x1e';
    key += token;
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) {
        ++hits_;
        return it->second;
      }
    }
    const double value = inner_->masked_logprob(query, token);
    std::unique_lock lock(mutex_);
    cache_.emplace(std::move(key), value);
    return value;
  }

  std::string id() const override { return inner_->id(); }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

  std::size_t hits() const { return hits_.load(); }

  const SequenceOracle& inner() const { return *inner_; }

 private:
  std::shared_ptr<const SequenceOracle> inner_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, double> cache_;
  mutable std::atomic<std::size_t> hits_{0};
};

}  // namespace gramforge
