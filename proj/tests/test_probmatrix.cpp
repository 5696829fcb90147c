#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "gramforge/ngram.hpp"
#include "gramforge/probmatrix.hpp"

using namespace gramforge;

namespace {

Corpus corpus_of(std::initializer_list<const char*> lines) {
  Corpus c;
  for (auto* l : lines) c.push_back(TokenSequence::from_text(l));
  return c;
}

void expect_same(const LabeledMatrix& a, const LabeledMatrix& b) {
  EXPECT_EQ(a.row_ids, b.row_ids);
  EXPECT_EQ(a.column_ids, b.column_ids);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (std::isnan(a.cells[i])) EXPECT_TRUE(std::isnan(b.cells[i]));
    else EXPECT_EQ(a.cells[i], b.cells[i]);
  }
}

}  // namespace

TEST(ExpandCorpus, OneRowPerPositionWithDuplicatesMerged) {
  const auto rows = expand_corpus(corpus_of({"a b", "a b", "a c"}));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].id(), "_ b");
  EXPECT_EQ(rows[1].id(), "a _");
  EXPECT_EQ(rows[2].id(), "_ c");
  EXPECT_EQ(rows[0].occurrences.size(), 2u);
  ASSERT_EQ(rows[1].occurrences.size(), 3u);
  EXPECT_EQ(rows[1].occurrences[2], (Occurrence{2, 1, "c"}));
  EXPECT_EQ(rows[1].fill("z").text(), "a z");
  EXPECT_THROW(expand_corpus({}), DataError);
}

TEST(ExpandCorpus, RowCountIsDistinctBlankedSentences) {
  const auto corpus = corpus_of({"the cat sat", "the dog sat", "the cat ran", "a cat sat"});
  std::set<std::string> distinct;
  for (const auto& s : corpus)
    for (std::size_t p = 0; p < s.size(); ++p) {
      auto t = s.tokens();
      t[p] = "_";
      distinct.insert(join(t));
    }
  EXPECT_EQ(expand_corpus(corpus).size(), distinct.size());
}

TEST(FillMatrix, CellsAreSentenceScores) {
  const auto corpus = corpus_of({"the cat sat", "a dog ran", "the dog sat"});
  const auto model = NgramOracleModel::train(corpus, 2, 0.1);
  const auto m = fill_matrix(expand_corpus(corpus), corpus_vocabulary(corpus), model);
  EXPECT_EQ(m.columns(), (std::vector<std::string>{"a", "cat", "dog", "ran", "sat", "the"}));
  for (std::size_t i = 0; i < m.row_count(); ++i)
    for (std::size_t j = 0; j < m.column_count(); ++j) {
      auto t = m.rows()[i].tokens;
      t[m.rows()[i].blank_position] = m.columns()[j];
      EXPECT_EQ(m.at(i, j), sequence_score(model, TokenSequence(t)).combined_logprob);
    }
  EXPECT_EQ(m.column_of("dog"), std::optional<std::size_t>(2));
  EXPECT_FALSE(m.column_of("zebra"));
}

TEST(FillMatrix, ParallelFillIsIdentical) {
  const auto corpus = corpus_of({"the cat sat", "a dog ran", "the dog sat", "a cat ran down"});
  const auto model = NgramOracleModel::train(corpus, 3, 0.1);
  FillOptions four;
  four.jobs = 4;
  expect_same(fill_matrix(expand_corpus(corpus), corpus_vocabulary(corpus), model).data(),
              fill_matrix(expand_corpus(corpus), corpus_vocabulary(corpus), model, four).data());
}

TEST(Persistence, CsvAndBinaryRoundTrip) {
  LabeledMatrix m;
  m.row_ids = {"_ b", "a, \"quoted\" _"};
  m.column_ids = {"x", "y#1", "z"};
  m.cells = {-1.5, 0.1 + 0.2, kEmptyCell, -1e-300, -std::acos(-1.0), -12345.678901234567};
  std::stringstream csv;
  write_csv(csv, m);
  expect_same(read_csv(csv), m);
  std::stringstream bin;
  write_binary(bin, m);
  expect_same(read_binary(bin), m);
}

TEST(Persistence, CorruptInputIsRejected) {
  std::stringstream bad_magic("XXXX1234");
  EXPECT_THROW(read_binary(bad_magic), DataError);
  std::stringstream truncated;
  LabeledMatrix m{{"r"}, {"c"}, {1.0}};
  write_binary(truncated, m);
  std::stringstream cut(truncated.str().substr(0, truncated.str().size() - 3));
  EXPECT_THROW(read_binary(cut), DataError);
  std::stringstream ragged("row,a,b\nr1,1\n");
  EXPECT_THROW(read_csv(ragged), DataError);
  std::stringstream no_header("col,a\n");
  EXPECT_THROW(read_csv(no_header), DataError);
}

TEST(Persistence, AttachRowsChecksTheCorpus) {
  const auto corpus = corpus_of({"a b", "b a"});
  const auto model = NgramOracleModel::train(corpus, 2, 0.1);
  const auto m = fill_matrix(expand_corpus(corpus), corpus_vocabulary(corpus), model);
  const auto back = attach_rows(m.data(), corpus);
  EXPECT_EQ(back.rows()[1].occurrences, m.rows()[1].occurrences);
  EXPECT_THROW(attach_rows(m.data(), corpus_of({"a b"})), DataError);
  EXPECT_THROW(attach_rows(m.data(), corpus_of({"a b", "a a"})), DataError);
}

TEST(SenseMatrix, SplitsColumnsByNearestCentroid) {
  // Rows: "_ b", "a _", "_ a", "b _". Hand-made cells; word "a" has two
  // senses whose centroids point at the "a" and "b" coordinates.
  const auto corpus = corpus_of({"a b", "b a"});
  const std::vector<double> cells{std::log(0.6), std::log(0.1), std::log(0.3), std::log(0.2),  // column a
                                  std::log(0.2), std::log(0.5), std::log(0.4), std::log(0.4)};  // column b
  const ProbMatrix m(expand_corpus(corpus), {"a", "b"}, cells);
  SenseInventory inv;
  SenseModel a;
  a.word = "a";
  a.centroids = {{1.0, 0.0}, {0.0, 1.0}};
  inv["a"] = a;
  const auto sm = build_sense_matrix(m, inv);
  ASSERT_EQ(sm.column_count(), 3u);
  EXPECT_EQ(sm.data().column_ids, (std::vector<std::string>{"a#0", "a#1", "b#0"}));
  // Row directions: (0.6,0.2)->sense 0, (0.1,0.5)->1, (0.3,0.4)->1, (0.2,0.4)->1.
  EXPECT_EQ(sm.at(0, 0), std::log(0.6));
  EXPECT_TRUE(is_empty_cell(sm.at(0, 1)));
  EXPECT_TRUE(is_empty_cell(sm.at(1, 0)));
  EXPECT_EQ(sm.at(1, 1), std::log(0.1));
  EXPECT_EQ(sm.at(2, 1), std::log(0.3));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(sm.at(i, 2), m.at(i, 1));

  std::vector<std::string> poly{"b"};
  EXPECT_THROW(build_sense_matrix(m, inv, poly), DataError);
  inv["a"].centroids = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  EXPECT_THROW(build_sense_matrix(m, inv), DataError);
}

TEST(SenseMatrix, ProbabilitySumsReconstructTheParent) {
  const auto corpus = corpus_of({"the cat sat", "a dog ran", "the dog sat", "a cat ran", "the cat ran"});
  const auto model = NgramOracleModel::train(corpus, 2, 0.1);
  const auto m = fill_matrix(expand_corpus(corpus), corpus_vocabulary(corpus), model);
  SenseInventory inv;
  for (const char* w : {"cat", "the"}) {
    SenseModel s;
    s.word = w;
    // Two arbitrary directions in row space.
    std::vector<double> c0(m.column_count(), 0.0), c1(m.column_count(), 0.0);
    c0[0] = 1.0;
    c1[m.column_count() - 1] = 1.0;
    s.centroids = {c0, c1};
    inv[w] = s;
  }
  const auto sm = build_sense_matrix(m, inv);
  EXPECT_EQ(sm.column_count(), m.column_count() + 2);
  EXPECT_EQ(sm.row_count(), m.row_count());
  for (std::size_t j = 0; j < m.column_count(); ++j) {
    const auto& word = m.columns()[j];
    for (std::size_t i = 0; i < m.row_count(); ++i) {
      double p = 0.0;
      int filled = 0;
      for (std::size_t k = 0; k < sm.column_count(); ++k)
        if (sm.senses()[k].word == word && !is_empty_cell(sm.at(i, k))) {
          p += std::exp(sm.at(i, k));
          ++filled;
        }
      EXPECT_EQ(filled, 1);
      EXPECT_NEAR(std::log(p), m.at(i, j), 1e-12);
    }
  }
}
