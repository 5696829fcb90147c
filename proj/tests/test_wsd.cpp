#include <cmath>

#include <gtest/gtest.h>

#include "gramforge/ngram.hpp"
#include "gramforge/wsd.hpp"
#include "planted_corpus.hpp"

using namespace gramforge;

namespace {

Corpus corpus_of(std::initializer_list<const char*> lines) {
  Corpus c;
  for (auto* l : lines) c.push_back(TokenSequence::from_text(l));
  return c;
}

std::vector<double> unit(std::vector<double> v) { return unit_normalized(std::move(v)); }

}  // namespace

TEST(WsdF1, HandComputedValues) {
  const std::vector<std::size_t> gold{0, 0, 0, 1, 1, 1};
  EXPECT_DOUBLE_EQ(wsd_f1(std::vector<std::size_t>{0, 0, 0, 1, 1, 1}, gold), 1.0);
  // Label names do not matter.
  EXPECT_DOUBLE_EQ(wsd_f1(std::vector<std::size_t>{1, 1, 1, 0, 0, 0}, gold), 1.0);
  // One mistake: 5 of 6 agree after alignment.
  EXPECT_NEAR(wsd_f1(std::vector<std::size_t>{0, 0, 1, 1, 1, 1}, gold), 5.0 / 6.0, 1e-12);
  // Single cluster: aligned to one gold sense, 3 of 6.
  EXPECT_NEAR(wsd_f1(std::vector<std::size_t>{0, 0, 0, 0, 0, 0}, gold), 0.5, 1e-12);
  // Three clusters, two gold senses: cluster 2 has no partner, so its
  // instances are unpredicted. tp = 4, predicted = 4, recall = 4/6.
  const double p = 1.0, r = 4.0 / 6.0;
  EXPECT_NEAR(wsd_f1(std::vector<std::size_t>{0, 0, 2, 1, 1, 2}, gold), 2 * p * r / (p + r), 1e-12);
  EXPECT_THROW(wsd_f1(std::vector<std::size_t>{0}, gold), DataError);
}

TEST(MaxWeightMatching, BruteForceAgreement) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 5;
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (auto& row : w)
      for (auto& x : row) x = static_cast<double>(uniform_index(rng, 10));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1;
    do {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += w[i][perm[i]];
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const auto m = max_weight_matching(w);
    double got = 0;
    std::set<std::size_t> used(m.begin(), m.end());
    EXPECT_EQ(used.size(), n);
    for (std::size_t i = 0; i < n; ++i) got += w[i][m[i]];
    EXPECT_EQ(got, best);
  }
}

TEST(FrequencyFilter, TopFractionWithLexicalTies) {
  const auto c = corpus_of({"a a a b b c", "d e f g h i j"});
  EXPECT_EQ(frequency_filter(c, 0.10), (std::set<std::string>{"a"}));
  EXPECT_EQ(frequency_filter(c, 0.2), (std::set<std::string>{"a", "b"}));
  // Ten words, 0.3 -> three: a, b, then c (ties broken alphabetically).
  EXPECT_EQ(frequency_filter(c, 0.3), (std::set<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(frequency_filter(c, 0.0).empty());
  EXPECT_THROW(frequency_filter(c, 1.0), ConfigError);
}

TEST(SphericalKMeans, SeparatesTwoDirections) {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 6; ++i) pts.push_back(unit({1.0, 0.05 * i, 0.0}));
  for (int i = 0; i < 6; ++i) pts.push_back(unit({0.0, 0.05 * i, 1.0}));
  const auto r = spherical_kmeans(pts, 2, 9);
  for (int i = 1; i < 6; ++i) EXPECT_EQ(r.labels[i], r.labels[0]);
  for (int i = 7; i < 12; ++i) EXPECT_EQ(r.labels[i], r.labels[6]);
  EXPECT_NE(r.labels[0], r.labels[6]);
  for (std::size_t t = 1; t < r.objective_trace.size(); ++t)
    EXPECT_GE(r.objective_trace[t], r.objective_trace[t - 1] - 1e-12);
  for (const auto& c : r.centroids) EXPECT_NEAR(norm2(c), 1.0, 1e-12);
  // Same seed, same answer.
  EXPECT_EQ(spherical_kmeans(pts, 2, 9).labels, r.labels);
}

TEST(ClusterSenses, DegenerateAndSmallCases) {
  std::vector<WordInstance> inst(3, WordInstance{"w", 0, 0, 0});
  const std::vector<std::vector<double>> same(3, {0.0, 2.0});
  const auto d = cluster_senses("w", inst, same, 2, 1);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.sense_count(), 1u);

  const std::vector<std::vector<double>> two{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
  const auto s = cluster_senses("w", inst, two, 5, 1);
  EXPECT_EQ(s.sense_count(), 2u);
  EXPECT_EQ(s.assignments, (std::vector<std::size_t>{0, 1, 0}));

  const auto one = cluster_senses("w", inst, two, 1, 1);
  EXPECT_EQ(one.sense_count(), 1u);
  EXPECT_THROW(cluster_senses("w", inst, two, 0, 1), ConfigError);
  EXPECT_THROW(cluster_senses("w", {}, {}, 2, 1), DataError);
}

TEST(InduceSenses, FrequentWordsAreExempt) {
  const auto p = planted::make(4);
  const auto model = NgramOracleModel::train(p.corpus, 2, 0.1);
  const auto m = fill_matrix(expand_corpus(p.corpus), corpus_vocabulary(p.corpus), model);
  WsdConfig config;
  config.seed = 4;
  const auto inv = induce_senses(m, p.corpus, config);
  EXPECT_EQ(inv.size(), corpus_vocabulary(p.corpus).size());
  EXPECT_TRUE(inv.at(".").exempt);
  EXPECT_EQ(inv.at(".").sense_count(), 1u);
  EXPECT_EQ(inv.at("bank").sense_count(), 2u);
  EXPECT_EQ(inv.at("bank").instances.size(), collect_instances(m, "bank").size());

  config.per_word_k["bank"] = 1;
  EXPECT_EQ(induce_senses(m, p.corpus, config).at("bank").sense_count(), 1u);
}

TEST(InduceSenses, SerializesAndReloads) {
  const auto p = planted::make(5);
  const auto model = NgramOracleModel::train(p.corpus, 2, 0.1);
  const auto m = fill_matrix(expand_corpus(p.corpus), corpus_vocabulary(p.corpus), model);
  WsdConfig config;
  config.seed = 5;
  const auto inv = induce_senses(m, p.corpus, config);
  const auto back = sense_inventory_from_json(nlohmann::json::parse(to_json(inv).dump()));
  ASSERT_EQ(back.size(), inv.size());
  EXPECT_EQ(back.at("bank").assignments, inv.at("bank").assignments);
  EXPECT_EQ(back.at("bank").centroids, inv.at("bank").centroids);
}

TEST(PlantedSenses, RecoveredForSeveralSeeds) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = planted::make(seed);
    EXPECT_GE(std::count(p.gold.begin(), p.gold.end(), 0u), 5);
    EXPECT_GE(std::count(p.gold.begin(), p.gold.end(), 1u), 5);
    EXPECT_GE(planted::recover_f1(seed), 0.9) << "seed " << seed;
  }
}
