#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gramforge/categories.hpp"
#include "gramforge/generator.hpp"
#include "gramforge/grammar.hpp"
#include "gramforge/induction.hpp"
#include "gramforge/ngram.hpp"
#include "gramforge/oracle.hpp"
#include "gramforge/probmatrix.hpp"
#include "gramforge/wsd.hpp"

// Six-word toy grammar (determiner, adjective, subject, verb, direct object,
// adverb; one word each) with hand-made spurious additions.
namespace gramforge::poc {

inline constexpr std::string_view kGoldGrammar = R"(% six words, six categories
#terminator .
the: kids+ | candy+;
small: kids+ | candy+;
kids: eat+ | the- & eat+ | small- & the- & eat+;
candy: eat- | the- & eat- | small- & the- & eat-;
eat: kids- | kids- & candy+ | kids- & quickly+ | kids- & candy+ & quickly+;
quickly: eat-;
)";

// Added by hand: mirror-image rules, each one a correct rule with its
// connector directions reversed ("candy eat kids the").
inline constexpr std::string_view kSpuriousRules = R"(candy: eat+;
eat: kids+ & candy-;
kids: eat-;
the: kids-;
kids: the+ & eat-;
eat: kids+;
)";

// Alternative spurious set with loops; together with the gold rules it yields
// e.g. "kids eat the the small candy kids eat candy the small quickly quickly .".
// Most of these perturb word order only locally, and their mutations read
// worse still, so mutation-mode evaluation tends to accept them.
inline constexpr std::string_view kLoopRules = R"(candy: small- & the- & the- & eat- & kids+;
kids: candy- & eat+;
candy: eat- & the+ & small+;
the: candy-;
small: candy-;
eat: kids- & quickly+ & candy+;
)";

inline constexpr std::string_view kLoopSentence = "kids eat the the small candy kids eat candy the small quickly quickly .";

inline constexpr std::string_view kMaximalSentence = "the small kids eat the small candy quickly .";

// One rule per disjunct, in dictionary order.
inline std::vector<Rule> split_rules(const Grammar& g) {
  std::vector<Rule> out;
  for (const auto& [owner, r] : g.rules())
    for (const auto& d : r.disjuncts) out.push_back(Rule{owner, {d}});
  return out;
}

inline std::vector<Rule> parse_rule_list(std::string_view text) {
  std::vector<Rule> out;
  for (const auto& block : detail::split(text, ';'))
    if (!detail::trim(block).empty()) out.push_back(parse_rule(block));
  return out;
}

inline Grammar gold_grammar() { return parse_grammar(kGoldGrammar); }
inline std::vector<Rule> correct_rules() { return split_rules(gold_grammar()); }

enum class SpuriousSet { mirror, loop };

inline std::vector<Rule> spurious_rules(SpuriousSet set = SpuriousSet::mirror) {
  return parse_rule_list(set == SpuriousSet::mirror ? kSpuriousRules : kLoopRules);
}

inline Grammar full_grammar(SpuriousSet set = SpuriousSet::mirror) {
  Grammar g = gold_grammar();
  for (const auto& r : spurious_rules(set)) g.add_rule(r);
  g.validate();
  return g;
}

// Unanchored sentences drawn from a grammar.
inline Corpus generate_corpus(const Grammar& g, std::size_t n, std::uint64_t seed, std::size_t max_len = 16) {
  GenerateOptions opts;
  opts.max_len = max_len;
  Rng rng(seed);
  Corpus out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate(g, nullptr, opts, rng).sentence);
  return out;
}

struct ExperimentConfig {
  std::size_t corpus_size = 5000;
  int order = 3;
  double smoothing_k = 0.1;
  std::uint64_t seed = 20230101;
  SpuriousSet spurious = SpuriousSet::mirror;
  InductionConfig induction{};
};

struct RuleOutcome {
  EvaluationReport report;
  bool spurious = false;
};

struct ExperimentResult {
  std::vector<RuleOutcome> outcomes;
  std::size_t correct_total = 0;
  std::size_t correct_rejected = 0;
  std::size_t spurious_total = 0;
  std::size_t spurious_rejected = 0;
  std::size_t skipped = 0;
  std::uint64_t corpus_seed = 0;
  std::uint64_t evaluation_seed = 0;
};

// Trains a trigram oracle on gold-generated sentences, then evaluates each of
// the 21 rules inside the full (gold + spurious) grammar.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       std::shared_ptr<const SequenceOracle> oracle = nullptr) {
  ExperimentResult result;
  result.corpus_seed = derive_seed(config.seed, "corpus");
  result.evaluation_seed = derive_seed(config.seed, "evaluation");
  if (!oracle) {
    const auto corpus = generate_corpus(gold_grammar(), config.corpus_size, result.corpus_seed);
    auto model = std::make_shared<NgramOracleModel>(
        NgramOracleModel::train(corpus, config.order, config.smoothing_k));
    oracle = std::make_shared<CachingOracle>(std::move(model));
  }
  auto induction = config.induction;
  induction.rng_seed = result.evaluation_seed;

  const Grammar grammar = full_grammar(config.spurious);
  auto correct = correct_rules();
  auto spurious = spurious_rules(config.spurious);
  std::vector<Rule> all = correct;
  all.insert(all.end(), spurious.begin(), spurious.end());
  auto reports = evaluate_rules(all, grammar, *oracle, induction);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const bool is_spurious = i >= correct.size();
    auto& r = reports[i];
    if (r.verdict == Verdict::skipped) ++result.skipped;
    const bool rejected = r.verdict == Verdict::reject;
    if (is_spurious) {
      ++result.spurious_total;
      result.spurious_rejected += rejected;
    } else {
      ++result.correct_total;
      result.correct_rejected += rejected;
    }
    result.outcomes.push_back({std::move(r), is_spurious});
  }
  return result;
}

// The same sentence shapes over a larger lexicon, for category formation.
// Pronouns stand alone as subjects; nouns always take a determiner.
inline constexpr std::string_view kCategoryGrammar = R"(#terminator .
#category DET: the my his
#category ADJ: small big
#category NOUN: kids dogs
#category PRON: they he i you
#category VERB: eat like
#category OBJ: candy apples
#category ADV: quickly
DET: NOUN+ | OBJ+;
ADJ: NOUN+ | OBJ+;
NOUN: DET- & VERB+ | ADJ- & DET- & VERB+;
PRON: VERB+;
OBJ: VERB- | DET- & VERB- | ADJ- & DET- & VERB-;
VERB: NOUN- | NOUN- & OBJ+ | NOUN- & ADV+ | NOUN- & OBJ+ & ADV+
    | PRON- | PRON- & OBJ+ | PRON- & ADV+ | PRON- & OBJ+ & ADV+;
ADV: VERB-;
)";

inline Grammar category_grammar() { return parse_grammar(kCategoryGrammar); }

struct CategoryExperimentConfig {
  std::size_t training_sentences = 2000;
  std::size_t matrix_sentences = 48;
  int order = 2;
  double smoothing_k = 0.1;
  std::uint64_t seed = 11;
  WsdConfig wsd{};
  CategoryParams categories{};
};

struct CategoryExperimentResult {
  Corpus sample;
  std::vector<WordCategory> categories;
  std::size_t sense_columns = 0;
  bool determiners_grouped = false;
  bool pronouns_grouped = false;
};

// True when some non-noise category holds a sense of every word in `group`
// and no sense of any word in `excluded`.
inline bool grouped(const std::vector<WordCategory>& categories, const std::vector<std::string>& group,
                    const std::vector<std::string>& excluded) {
  for (const auto& c : categories) {
    if (c.id == kUncategorized) continue;
    std::set<std::string> words;
    for (const auto& m : c.members) words.insert(m.word);
    bool ok = true;
    for (const auto& w : group) ok = ok && words.count(w);
    for (const auto& w : excluded) ok = ok && !words.count(w);
    if (ok) return true;
  }
  return false;
}

// Gold sentences -> n-gram oracle; a smaller gold sample -> M, senses, M',
// categories.
inline CategoryExperimentResult run_category_experiment(const CategoryExperimentConfig& config) {
  const Grammar g = category_grammar();
  const auto training = generate_corpus(g, config.training_sentences, derive_seed(config.seed, "training"));
  auto model = std::make_shared<NgramOracleModel>(NgramOracleModel::train(training, config.order, config.smoothing_k));
  CachingOracle oracle(model);
  CategoryExperimentResult out;
  out.sample = generate_corpus(g, config.matrix_sentences, derive_seed(config.seed, "sample"));
  FillOptions fill;
  fill.jobs = config.categories.jobs;
  const auto m = fill_matrix(expand_corpus(out.sample), corpus_vocabulary(out.sample), oracle, fill);
  auto wsd = config.wsd;
  wsd.seed = derive_seed(config.seed, "wsd");
  const auto senses = induce_senses(m, out.sample, wsd);
  const auto sm = build_sense_matrix(m, senses);
  out.sense_columns = sm.column_count();
  out.categories = cluster_categories(sm, config.categories);
  const auto det = g.words_of("DET");
  const auto pron = g.words_of("PRON");
  out.determiners_grouped = grouped(out.categories, det, pron);
  out.pronouns_grouped = grouped(out.categories, pron, det);
  return out;
}

}  // namespace gramforge::poc
