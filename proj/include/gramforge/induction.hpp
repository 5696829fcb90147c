#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gramforge/categories.hpp"
#include "gramforge/generator.hpp"
#include "gramforge/grammar.hpp"
#include "gramforge/oracle.hpp"
#include "gramforge/parallel.hpp"
#include "gramforge/random.hpp"

namespace gramforge {

enum class Provenance { corpus, user };
enum class EvaluationMode { mutation, reference };
enum class LengthNormalization { per_token, none };
enum class Verdict { accept, reject, skipped };

inline std::string to_string(Provenance p) { return p == Provenance::corpus ? "proposed-from-corpus" : "user-supplied"; }
inline std::string to_string(EvaluationMode m) { return m == EvaluationMode::mutation ? "mutation" : "reference"; }
inline std::string to_string(LengthNormalization n) { return n == LengthNormalization::per_token ? "per-token" : "none"; }
inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::accept: return "accept";
    case Verdict::reject: return "reject";
    default: return "skipped";
  }
}

struct CandidateRule {
  Rule rule;
  std::vector<Rule> counterparts;  // peer rules the candidate needs to link
  Provenance provenance = Provenance::corpus;
  std::size_t support = 0;
};

struct ScoredSample {
  TokenSequence sentence;
  double combined_logprob = 0.0;
  double normalized = 0.0;  // the value that enters the mean
};

struct EvaluationReport {
  Rule rule;
  std::optional<Rule> mutated_rule;
  std::vector<ScoredSample> samples_original;
  std::vector<ScoredSample> samples_mutated;  // reference sentences in reference mode
  double mean_original = 0.0;
  double mean_mutated = 0.0;
  double margin = 0.0;
  double threshold = 0.0;
  Verdict verdict = Verdict::reject;
  EvaluationMode mode = EvaluationMode::mutation;
  std::vector<std::string> warnings;
  std::string error;  // set when skipped
};

struct InductionConfig {
  std::size_t samples_per_rule = 20;  // K
  double threshold = 0.2;             // tau, nats per token
  std::size_t max_len = 16;
  std::uint64_t rng_seed = 1;
  EvaluationMode mode = EvaluationMode::mutation;
  LengthNormalization length_normalization = LengthNormalization::per_token;
  std::size_t min_support = 1;
  std::size_t jobs = 1;

  void validate() const {
    if (samples_per_rule < 1) throw ConfigError("samples_per_rule must be >= 1");
    if (!(threshold >= 0.0)) throw ConfigError("threshold must be >= 0");
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
  }
};

namespace detail {

inline double normalized_score(double combined, std::size_t len, LengthNormalization n) {
  return n == LengthNormalization::per_token ? combined / static_cast<double>(len) : combined;
}

inline double mean_of(const std::vector<ScoredSample>& xs) {
  double s = 0.0;
  for (const auto& x : xs) s += x.normalized;
  return s / static_cast<double>(xs.size());
}

inline std::vector<ScoredSample> sample_and_score(const Grammar& g, const Rule& anchor, const SequenceOracle& oracle,
                                                  const InductionConfig& config, std::uint64_t seed) {
  GenerateOptions opts;
  opts.max_len = config.max_len;
  Rng rng(seed);
  std::vector<ScoredSample> out;
  out.reserve(config.samples_per_rule);
  for (std::size_t i = 0; i < config.samples_per_rule; ++i) {
    auto gen = generate(g, &anchor, opts, rng);
    const double c = sequence_score(oracle, gen.sentence).combined_logprob;
    out.push_back({gen.sentence, c, normalized_score(c, gen.sentence.size(), config.length_normalization)});
  }
  return out;
}

inline Grammar with_rule(const Grammar& grammar, const Rule& rule) {
  Grammar g = grammar;
  g.add_rule(rule);
  g.validate();
  return g;
}

}  // namespace detail

// Generates K anchored sentences using the rule inside `grammar` and K using
// its mutation (connectors flipped, counterparts swapped), and accepts the
// rule when the per-token mean of the former beats the latter by more than tau.
// The input grammar is never modified.
inline EvaluationReport evaluate_rule(const Rule& rule, const Grammar& grammar, const SequenceOracle& oracle,
                                      const InductionConfig& config) {
  config.validate();
  EvaluationReport report;
  report.rule = rule;
  report.mode = EvaluationMode::mutation;
  report.threshold = config.threshold;
  const Grammar installed = detail::with_rule(grammar, rule);
  auto [flipped, mutated] = mutate_rule(rule, installed);
  report.mutated_rule = flipped;
  const std::uint64_t seed = derive_seed(config.rng_seed, rule.text());
  try {
    report.samples_original = detail::sample_and_score(installed, rule, oracle, config, derive_seed(seed, "original"));
    report.samples_mutated = detail::sample_and_score(mutated, flipped, oracle, config, derive_seed(seed, "mutated"));
  } catch (const GenerationError& e) {
    report.verdict = Verdict::skipped;
    report.error = e.what();
    return report;
  }
  report.mean_original = detail::mean_of(report.samples_original);
  report.mean_mutated = detail::mean_of(report.samples_mutated);
  report.margin = report.mean_original - report.mean_mutated;
  report.verdict = report.margin > config.threshold ? Verdict::accept : Verdict::reject;
  return report;
}

// Compares K generated sentences against reference sentences of matching
// length: accept iff mean(generated) >= mean(matched references) - tau.
inline EvaluationReport evaluate_against_references(const Rule& rule, const Grammar& grammar,
                                                    const SequenceOracle& oracle, const Corpus& references,
                                                    const InductionConfig& config) {
  config.validate();
  if (references.empty()) throw DataError("reference set is empty");
  EvaluationReport report;
  report.rule = rule;
  report.mode = EvaluationMode::reference;
  report.threshold = config.threshold;
  const Grammar installed = detail::with_rule(grammar, rule);
  try {
    report.samples_original = detail::sample_and_score(installed, rule, oracle, config,
                                                       derive_seed(derive_seed(config.rng_seed, rule.text()), "original"));
  } catch (const GenerationError& e) {
    report.verdict = Verdict::skipped;
    report.error = e.what();
    return report;
  }

  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < references.size(); ++i) by_length[references[i].size()].push_back(i);
  std::map<std::size_t, ScoredSample> scored;
  auto score_ref = [&](std::size_t i) -> const ScoredSample& {
    auto it = scored.find(i);
    if (it == scored.end()) {
      const double c = sequence_score(oracle, references[i]).combined_logprob;
      it = scored.emplace(i, ScoredSample{references[i], c,
                                          detail::normalized_score(c, references[i].size(),
                                                                   config.length_normalization)}).first;
    }
    return it->second;
  };

  // Each generated sentence is paired with the mean of the references of its
  // length (or the nearest available length).
  double ref_total = 0.0;
  std::set<std::size_t> warned;
  for (const auto& s : report.samples_original) {
    const std::size_t len = s.sentence.size();
    auto best = by_length.begin();
    for (auto it = by_length.begin(); it != by_length.end(); ++it) {
      const auto d = [&](std::size_t l) { return l > len ? l - len : len - l; };
      if (d(it->first) < d(best->first)) best = it;
    }
    if (best->first != len && warned.insert(len).second)
      report.warnings.push_back("no reference of length " + std::to_string(len) + "; using length " +
                                std::to_string(best->first));
    double m = 0.0;
    for (auto i : best->second) m += score_ref(i).normalized;
    ref_total += m / static_cast<double>(best->second.size());
  }
  for (auto& [_, s] : scored) report.samples_mutated.push_back(s);
  report.mean_original = detail::mean_of(report.samples_original);
  report.mean_mutated = ref_total / static_cast<double>(report.samples_original.size());
  report.margin = report.mean_original - report.mean_mutated;
  report.verdict = report.margin >= -config.threshold ? Verdict::accept : Verdict::reject;
  return report;
}

// Owner name for each token of a tagged sentence: the category owner
// ("C<id>") when categorized, otherwise the word itself.
inline std::string category_owner(int id) { return "C" + std::to_string(id); }

inline std::vector<std::vector<std::string>> owner_tags(const std::vector<TaggedSentence>& corpus) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : corpus) {
    std::vector<std::string> tags;
    for (const auto& t : s) tags.push_back(t.category == kUncategorized ? t.word : category_owner(t.category));
    out.push_back(std::move(tags));
  }
  return out;
}

// Lexicon for category owners seen in a tagged corpus.
inline std::map<std::string, std::vector<std::string>> owner_lexicon(const std::vector<TaggedSentence>& corpus) {
  std::map<std::string, std::set<std::string>> sets;
  for (const auto& s : corpus)
    for (const auto& t : s)
      if (t.category != kUncategorized) sets[category_owner(t.category)].insert(t.word);
  std::map<std::string, std::vector<std::string>> out;
  for (auto& [k, v] : sets) out[k] = {v.begin(), v.end()};
  return out;
}

// Candidate rules from adjacency statistics over owner-tagged sentences:
//   A B    -> B: A-            (counterpart A: B+)
//   A B C  -> C: B- & A-       (counterparts B: C+, A: C+)
//   A B C  -> A: B+ & C+       (counterparts B: A-, C: A-)
// Sorted by support (descending), then rule text. `terminator`, if given, is
// never part of a candidate.
inline std::vector<CandidateRule> propose_rules(const std::vector<std::vector<std::string>>& tagged,
                                                std::size_t min_support = 1,
                                                const std::optional<std::string>& terminator = std::nullopt) {
  if (tagged.empty()) throw DataError("cannot propose rules from an empty tagged corpus");
  std::map<std::string, CandidateRule> found;
  auto note = [&](Rule r, std::vector<Rule> counterparts) {
    auto key = r.text();
    auto [it, fresh] = found.try_emplace(key);
    if (fresh) it->second = CandidateRule{std::move(r), std::move(counterparts), Provenance::corpus, 0};
    ++it->second.support;
  };
  auto conn = [](const std::string& l, Direction d) { return Connector{l, d}; };
  for (const auto& s : tagged) {
    std::vector<std::string> t;
    for (const auto& w : s)
      if (!terminator || w != *terminator) t.push_back(w);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const auto &a = t[i], &b = t[i + 1];
      note(Rule{b, {Disjunct{{conn(a, Direction::left)}}}}, {Rule{a, {Disjunct{{conn(b, Direction::right)}}}}});
    }
    for (std::size_t i = 0; i + 2 < t.size(); ++i) {
      const auto &a = t[i], &b = t[i + 1], &c = t[i + 2];
      note(Rule{c, {Disjunct{{conn(b, Direction::left), conn(a, Direction::left)}}}},
           {Rule{b, {Disjunct{{conn(c, Direction::right)}}}}, Rule{a, {Disjunct{{conn(c, Direction::right)}}}}});
      note(Rule{a, {Disjunct{{conn(b, Direction::right), conn(c, Direction::right)}}}},
           {Rule{b, {Disjunct{{conn(a, Direction::left)}}}}, Rule{c, {Disjunct{{conn(a, Direction::left)}}}}});
    }
  }
  std::vector<CandidateRule> out;
  for (auto& [_, c] : found)
    if (c.support >= min_support) out.push_back(std::move(c));
  std::stable_sort(out.begin(), out.end(), [](const CandidateRule& x, const CandidateRule& y) {
    if (x.support != y.support) return x.support > y.support;
    return x.rule.text() < y.rule.text();
  });
  return out;
}

struct InductionResult {
  Grammar grammar;
  std::vector<EvaluationReport> reports;
};

// Walks the candidates in order; each one is evaluated inside the grammar
// accepted so far (plus its counterparts) and installed when accepted.
inline InductionResult induce(const std::vector<CandidateRule>& candidates, const SequenceOracle& oracle,
                              const InductionConfig& config, Grammar base = {},
                              const Corpus* references = nullptr) {
  config.validate();
  InductionResult result;
  result.grammar = std::move(base);
  for (const auto& cand : candidates) {
    Grammar trial = result.grammar;
    for (const auto& cp : cand.counterparts) trial.add_rule(cp);
    for (const auto& [cat, words] : result.grammar.lexicon()) trial.set_category(cat, words);
    EvaluationReport report;
    try {
      report = config.mode == EvaluationMode::mutation
                   ? evaluate_rule(cand.rule, trial, oracle, config)
                   : evaluate_against_references(cand.rule, trial, oracle,
                                                 references ? *references : Corpus{}, config);
    } catch (const GrammarError& e) {
      report.rule = cand.rule;
      report.mode = config.mode;
      report.threshold = config.threshold;
      report.verdict = Verdict::skipped;
      report.error = e.what();
    }
    if (report.verdict == Verdict::accept) {
      trial.add_rule(cand.rule);
      result.grammar = std::move(trial);
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

// Evaluates rules independently against a fixed grammar, concurrently.
inline std::vector<EvaluationReport> evaluate_rules(const std::vector<Rule>& rules, const Grammar& grammar,
                                                    const SequenceOracle& oracle, const InductionConfig& config) {
  std::vector<EvaluationReport> out(rules.size());
  parallel_for(rules.size(), config.jobs, [&](std::size_t i) {
    try {
      out[i] = evaluate_rule(rules[i], grammar, oracle, config);
    } catch (const GrammarError& e) {
      out[i].rule = rules[i];
      out[i].threshold = config.threshold;
      out[i].verdict = Verdict::skipped;
      out[i].error = e.what();
    }
  });
  return out;
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  auto samples = [](const std::vector<ScoredSample>& xs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : xs)
      a.push_back({{"sentence", x.sentence.text()}, {"combined_logprob", x.combined_logprob},
                   {"normalized", x.normalized}});
    return a;
  };
  nlohmann::json j{{"rule", r.rule.text()},
                   {"mutated_rule", r.mutated_rule ? nlohmann::json(r.mutated_rule->text()) : nlohmann::json()},
                   {"mode", to_string(r.mode)},
                   {"verdict", to_string(r.verdict)},
                   {"margin", r.margin},
                   {"threshold", r.threshold},
                   {"mean_original", r.mean_original},
                   {"mean_mutated", r.mean_mutated},
                   {"samples_original", samples(r.samples_original)},
                   {r.mode == EvaluationMode::mutation ? "samples_mutated" : "samples_reference",
                    samples(r.samples_mutated)}};
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline void write_jsonl(std::ostream& out, const std::vector<EvaluationReport>& reports) {
  for (const auto& r : reports) out << to_json(r).dump() << "\n";
}

}  // namespace gramforge
