#include <set>

#include <gtest/gtest.h>

#include "gramforge/generator.hpp"
#include "gramforge/poc.hpp"

using namespace gramforge;

TEST(Generator, EverySentenceParses) {
  const auto g = poc::full_grammar();
  GenerateOptions opts;
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto s = generate(g, nullptr, opts, rng);
    EXPECT_LE(s.sentence.size(), opts.max_len);
    EXPECT_EQ(s.sentence.tokens().back(), ".");
    EXPECT_TRUE(parse(s.sentence, g)) << s.sentence.text();
    EXPECT_TRUE(is_planar(s.linkage.links));
    EXPECT_EQ(s.linkage.owners.size(), s.sentence.size());
  }
}

TEST(Generator, AnchorRuleIsUsed) {
  const auto g = poc::gold_grammar();
  GenerateOptions opts;
  Rng rng(9);
  for (const auto& rule : poc::correct_rules()) {
    for (int i = 0; i < 20; ++i) {
      const auto s = generate(g, &rule, opts, rng);
      const auto p = s.anchor_position;
      ASSERT_LT(p, s.sentence.size());
      EXPECT_EQ(s.linkage.owners[p], rule.owner);
      EXPECT_EQ(s.linkage.disjuncts[p], rule.disjuncts[0]) << rule.text() << " in " << s.sentence.text();
      EXPECT_TRUE(parse(s.sentence, g));
    }
  }
}

TEST(Generator, LinkageMatchesDisjuncts) {
  const auto g = poc::gold_grammar();
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const auto s = generate(g, nullptr, {}, rng);
    // Each connector yields exactly one link end.
    std::size_t connectors = 0;
    for (const auto& d : s.linkage.disjuncts) connectors += d.connectors.size();
    EXPECT_EQ(2 * s.linkage.links.size(), connectors);
    for (const auto& l : s.linkage.links) {
      EXPECT_LT(l.left, l.right);
      EXPECT_EQ(s.linkage.owners[l.left], l.left_owner);
      EXPECT_EQ(s.linkage.owners[l.right], l.right_owner);
    }
  }
}

TEST(Generator, ReachesTheMaximalSentence) {
  const auto g = poc::gold_grammar();
  Rng rng(1);
  bool seen = false;
  for (int i = 0; i < 10000 && !seen; ++i)
    seen = generate(g, nullptr, {}, rng).sentence.text() == poc::kMaximalSentence;
  EXPECT_TRUE(seen);
}

TEST(Generator, CoversAllGoldShapes) {
  const auto g = poc::gold_grammar();
  Rng rng(4);
  std::set<std::string> seen;
  for (int i = 0; i < 5000; ++i) seen.insert(generate(g, nullptr, {}, rng).sentence.text());
  // subject: 3 forms; object: none or 3 forms; adverb: yes/no.
  EXPECT_EQ(seen.size(), 3u * 4u * 2u);
}

TEST(Generator, CategoryWordsAreSampled) {
  const auto g = poc::category_grammar();
  Rng rng(8);
  std::set<std::string> words;
  for (int i = 0; i < 500; ++i) {
    const auto s = generate(g, nullptr, {}, rng);
    EXPECT_TRUE(parse(s.sentence, g)) << s.sentence.text();
    for (const auto& w : s.sentence) words.insert(w);
  }
  EXPECT_TRUE(words.count("my"));
  EXPECT_TRUE(words.count("you"));
  EXPECT_FALSE(words.count("DET"));
}

TEST(Generator, DeterministicForSeed) {
  const auto g = poc::full_grammar();
  const auto anchor = poc::spurious_rules()[0];
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = generate(g, anchor, {}, seed);
    const auto b = generate(g, anchor, {}, seed);
    EXPECT_EQ(a.sentence.text(), b.sentence.text());
  }
}

TEST(Generator, ImpossibleLengthThrows) {
  const auto g = parse_grammar("a: b+; b: a- & c+; c: b-;");
  GenerateOptions opts;
  opts.max_len = 2;
  opts.attempts = 10;
  Rng rng(1);
  EXPECT_THROW(generate(g, nullptr, opts, rng), GenerationError);
  EXPECT_THROW(generate(Grammar{}, nullptr, opts, rng), GenerationError);
  opts.max_len = 0;
  EXPECT_THROW(generate(g, nullptr, opts, rng), ConfigError);
}

TEST(Generator, WeightSteersFillers) {
  const auto g = parse_grammar("v: n- ; n: v+ | d- & v+; d: n+;");
  GenerateOptions opts;
  opts.weight = [](const std::string& owner, const Disjunct& d) {
    return owner == "n" && d.connectors.size() == 1 ? 0.0 : 1.0;
  };
  const Rule anchor = parse_rule("v: n-");
  Rng rng(3);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(generate(g, &anchor, opts, rng).sentence.text(), "d n v");
}
