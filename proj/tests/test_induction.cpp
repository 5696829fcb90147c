#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "gramforge/induction.hpp"
#include "gramforge/ngram.hpp"
#include "gramforge/poc.hpp"

using namespace gramforge;

namespace {

// Same probability for every token everywhere: no preference for any order.
class FlatOracle final : public SequenceOracle {
 public:
  double masked_logprob(const MaskedQuery&, std::string_view) const override { return std::log(0.1); }
  std::string id() const override { return "flat"; }
};

// Adds a constant to every conditional log-probability of the wrapped oracle.
class ShiftedOracle final : public SequenceOracle {
 public:
  ShiftedOracle(const SequenceOracle& base, double shift) : base_(base), shift_(shift) {}
  double masked_logprob(const MaskedQuery& q, std::string_view t) const override {
    return base_.masked_logprob(q, t) + shift_;
  }
  std::string id() const override { return "shifted"; }

 private:
  const SequenceOracle& base_;
  double shift_;
};

std::shared_ptr<NgramOracleModel> gold_oracle() {
  static auto m = std::make_shared<NgramOracleModel>(
      NgramOracleModel::train(poc::generate_corpus(poc::gold_grammar(), 2000, 77), 3, 0.1));
  return m;
}

InductionConfig small_config() {
  InductionConfig c;
  c.samples_per_rule = 10;
  c.rng_seed = 5;
  return c;
}

}  // namespace

TEST(ProposeRules, AdjacencyAndTriples) {
  const auto c = propose_rules({{"det", "subj", "verb", "."}, {"det", "subj", "verb", "."}}, 1, ".");
  std::map<std::string, std::size_t> support;
  for (const auto& r : c) support[r.rule.text()] = r.support;
  EXPECT_EQ(support.at("subj: det-"), 2u);
  EXPECT_EQ(support.at("verb: subj-"), 2u);
  EXPECT_EQ(support.at("verb: subj- & det-"), 2u);
  EXPECT_EQ(support.at("det: subj+ & verb+"), 2u);
  EXPECT_EQ(support.size(), 4u);  // the terminator never appears
  const auto& first = *std::find_if(c.begin(), c.end(), [](auto& r) { return r.rule.text() == "subj: det-"; });
  ASSERT_EQ(first.counterparts.size(), 1u);
  EXPECT_EQ(first.counterparts[0].text(), "det: subj+");
  EXPECT_EQ(first.provenance, Provenance::corpus);
}

TEST(ProposeRules, SortedBySupportThenTextAndFiltered) {
  const auto c = propose_rules({{"a", "b"}, {"a", "b"}, {"c", "b"}}, 1);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].rule.text(), "b: a-");
  EXPECT_EQ(c[1].rule.text(), "b: c-");
  EXPECT_EQ(propose_rules({{"a", "b"}, {"a", "b"}, {"c", "b"}}, 2).size(), 1u);
  EXPECT_THROW(propose_rules({}), DataError);
}

TEST(ProposeRules, CategoryOwnersFromTags) {
  const std::vector<TaggedSentence> tagged{{{"the", 0, 3}, {"kids", 0, kUncategorized}}, {{"a", 0, 3}, {"kids", 0, kUncategorized}}};
  const auto tags = owner_tags(tagged);
  EXPECT_EQ(tags[0], (std::vector<std::string>{"C3", "kids"}));
  const auto lex = owner_lexicon(tagged);
  EXPECT_EQ(lex.at("C3"), (std::vector<std::string>{"a", "the"}));
  EXPECT_EQ(propose_rules(tags)[0].rule.text(), "kids: C3-");
}

TEST(EvaluateRule, FlatOracleHasNoPreference) {
  const auto g = poc::gold_grammar();
  FlatOracle flat;
  for (const auto& rule : poc::correct_rules()) {
    const auto r = evaluate_rule(rule, g, flat, small_config());
    ASSERT_EQ(r.verdict, Verdict::reject) << rule.text();
    EXPECT_NEAR(r.margin, 0.0, 1e-12);
    EXPECT_EQ(r.samples_original.size(), 10u);
    EXPECT_EQ(r.samples_mutated.size(), 10u);
  }
}

TEST(EvaluateRule, GoldRuleBeatsItsMirror) {
  const auto g = poc::gold_grammar();
  const auto rule = parse_rule("kids: the- & eat+");
  const auto r = evaluate_rule(rule, g, *gold_oracle(), small_config());
  EXPECT_EQ(r.verdict, Verdict::accept);
  EXPECT_GT(r.margin, 1.0);
  EXPECT_EQ(*r.mutated_rule, parse_rule("kids: the+ & eat-"));
  double mean = 0.0;
  for (const auto& s : r.samples_original) {
    EXPECT_NEAR(s.normalized, s.combined_logprob / static_cast<double>(s.sentence.size()), 1e-12);
    mean += s.normalized;
  }
  EXPECT_NEAR(r.mean_original, mean / 10.0, 1e-12);
  EXPECT_NEAR(r.margin, r.mean_original - r.mean_mutated, 1e-12);
}

TEST(EvaluateRule, ThresholdIsStrict) {
  const auto g = poc::gold_grammar();
  auto config = small_config();
  const auto rule = parse_rule("quickly: eat-");
  const auto r = evaluate_rule(rule, g, *gold_oracle(), config);
  config.threshold = r.margin;
  EXPECT_EQ(evaluate_rule(rule, g, *gold_oracle(), config).verdict, Verdict::reject);
  config.threshold = std::nextafter(r.margin, 0.0);
  EXPECT_EQ(evaluate_rule(rule, g, *gold_oracle(), config).verdict, Verdict::accept);
}

TEST(EvaluateRule, InvariantToAdditiveShift) {
  const auto g = poc::full_grammar();
  const ShiftedOracle shifted(*gold_oracle(), -0.7);
  for (const auto& rule : poc::spurious_rules()) {
    const auto a = evaluate_rule(rule, g, *gold_oracle(), small_config());
    const auto b = evaluate_rule(rule, g, shifted, small_config());
    EXPECT_NEAR(a.margin, b.margin, 1e-9) << rule.text();
    EXPECT_EQ(a.verdict, b.verdict);
  }
}

TEST(EvaluateRule, DeterministicAndThreadIndependent) {
  const auto g = poc::full_grammar();
  auto rules = poc::correct_rules();
  auto config = small_config();
  const auto one = evaluate_rules(rules, g, *gold_oracle(), config);
  config.jobs = 4;
  const auto four = evaluate_rules(rules, g, *gold_oracle(), config);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].margin, four[i].margin);
    EXPECT_EQ(to_json(one[i]).dump(), to_json(four[i]).dump());
  }
}

TEST(EvaluateRule, LeavesTheGrammarAlone) {
  const auto g = poc::full_grammar();
  const auto before = g.text();
  evaluate_rule(poc::spurious_rules()[1], g, *gold_oracle(), small_config());
  EXPECT_EQ(g.text(), before);
}

TEST(EvaluateRule, UnsatisfiableAnchorIsSkipped) {
  // Every sentence using "a" needs at least three words.
  const auto g = parse_grammar("a: b+; b: a- & c+; c: b-;");
  auto config = small_config();
  config.max_len = 2;
  const auto r = evaluate_rule(parse_rule("a: b+"), g, FlatOracle{}, config);
  EXPECT_EQ(r.verdict, Verdict::skipped);
  EXPECT_FALSE(r.error.empty());
  EXPECT_EQ(to_json(r).at("verdict"), "skipped");
  // A connector naming an unknown owner is a grammar error, not a skip.
  EXPECT_THROW(evaluate_rule(parse_rule("a: z+"), g, FlatOracle{}, config), GrammarError);
}

TEST(EvaluateRule, InvalidConfig) {
  auto config = small_config();
  config.samples_per_rule = 0;
  EXPECT_THROW(evaluate_rule(poc::correct_rules()[0], poc::gold_grammar(), FlatOracle{}, config), ConfigError);
}

TEST(EvaluateAgainstReferences, OwnSamplesAreAccepted) {
  const auto g = poc::gold_grammar();
  const auto rule = parse_rule("candy: the- & eat-");
  const auto config = small_config();
  // The references are exactly the sentences the evaluation will draw.
  const auto probe = evaluate_against_references(rule, g, *gold_oracle(), Corpus{TokenSequence::from_text("kids eat .")},
                                                 config);
  Corpus refs;
  for (const auto& s : probe.samples_original) refs.push_back(s.sentence);
  const auto r = evaluate_against_references(rule, g, *gold_oracle(), refs, config);
  EXPECT_EQ(r.verdict, Verdict::accept);
  EXPECT_TRUE(r.warnings.empty());
  // Per length, the generated mean equals the reference mean.
  EXPECT_NEAR(r.margin, 0.0, 1e-9);
}

TEST(EvaluateAgainstReferences, WarnsOnLengthMismatch) {
  const auto r = evaluate_against_references(parse_rule("quickly: eat-"), poc::gold_grammar(), *gold_oracle(),
                                             Corpus{TokenSequence::from_text("kids eat .")}, small_config());
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("using length 3"), std::string::npos);
  EXPECT_EQ(r.mode, EvaluationMode::reference);
  EXPECT_THROW(evaluate_against_references(parse_rule("quickly: eat-"), poc::gold_grammar(), *gold_oracle(), Corpus{},
                                           small_config()),
               DataError);
}

TEST(EvaluateAgainstReferences, ScrambledRuleIsRejected) {
  Corpus refs = poc::generate_corpus(poc::gold_grammar(), 200, 3);
  const auto r = evaluate_against_references(parse_rule("kids: the+ & eat-"), poc::full_grammar(), *gold_oracle(), refs,
                                             small_config());
  EXPECT_EQ(r.verdict, Verdict::reject);
  EXPECT_LT(r.margin, -1.0);
}

TEST(Induce, AcceptsGoldAdjacencyOnGoldText) {
  const auto corpus = poc::generate_corpus(poc::gold_grammar(), 100, 12);
  std::vector<std::vector<std::string>> tagged;
  for (const auto& s : corpus) tagged.push_back(s.tokens());
  const auto candidates = propose_rules(tagged, 5, ".");
  ASSERT_FALSE(candidates.empty());
  Grammar base;
  base.set_terminator(".");
  const auto result = induce(candidates, *gold_oracle(), small_config(), base);
  ASSERT_EQ(result.reports.size(), candidates.size());
  ASSERT_TRUE(result.grammar.rule("kids"));
  EXPECT_TRUE(parse(TokenSequence::from_text("the kids eat ."), result.grammar));
  EXPECT_FALSE(parse(TokenSequence::from_text("eat kids the ."), result.grammar));
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (result.reports[i].verdict == Verdict::accept)
      EXPECT_TRUE(std::find(result.grammar.rule(candidates[i].rule.owner)->disjuncts.begin(),
                            result.grammar.rule(candidates[i].rule.owner)->disjuncts.end(),
                            candidates[i].rule.disjuncts[0]) != result.grammar.rule(candidates[i].rule.owner)->disjuncts.end());
}

TEST(Reports, JsonLines) {
  const auto r = evaluate_rule(parse_rule("the: kids+"), poc::gold_grammar(), *gold_oracle(), small_config());
  std::ostringstream out;
  write_jsonl(out, {r, r});
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("rule"), "the: kids+");
    EXPECT_EQ(j.at("mutated_rule"), "the: kids-");
    EXPECT_EQ(j.at("verdict"), "accept");
    EXPECT_EQ(j.at("samples_original").size(), 10u);
    EXPECT_DOUBLE_EQ(j.at("margin").get<double>(), r.margin);
    ++n;
  }
  EXPECT_EQ(n, 2);
}
