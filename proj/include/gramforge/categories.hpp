#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gramforge/optics.hpp"
#include "gramforge/parallel.hpp"
#include "gramforge/probmatrix.hpp"
#include "gramforge/sense_model.hpp"
#include "gramforge/vecmath.hpp"

namespace gramforge {

inline constexpr int kUncategorized = -1;

struct WordCategory {
  int id = kUncategorized;
  std::vector<SenseId> members;
};

struct CategoryParams {
  OpticsParams optics{};
  std::size_t jobs = 1;
};

// Density-based clustering of the sense columns (probability space, unit
// norm, cosine distance). Returns the noise bucket (id -1) first if it is
// non-empty, then categories 0..n-1.
inline std::vector<WordCategory> cluster_categories(const SenseMatrix& m, const CategoryParams& params = {}) {
  const std::size_t n = m.column_count();
  if (n < 2) throw DataError("category clustering needs at least two sense columns");
  std::vector<std::vector<double>> vecs(n);
  for (std::size_t j = 0; j < n; ++j) vecs[j] = probability_direction(m.column(j));
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  parallel_for(n, params.jobs, [&](std::size_t a) {
    for (std::size_t b = 0; b < n; ++b)
      if (a != b) dist[a][b] = cosine_distance(vecs[a], vecs[b]);
  });
  const auto result = optics(dist, params.optics);
  int max_label = -1;
  for (int l : result.labels) max_label = std::max(max_label, l);
  std::vector<WordCategory> out;
  WordCategory noise;
  for (std::size_t j = 0; j < n; ++j)
    if (result.labels[j] == kUncategorized) noise.members.push_back(m.senses()[j]);
  if (!noise.members.empty()) out.push_back(std::move(noise));
  for (int c = 0; c <= max_label; ++c) {
    WordCategory cat;
    cat.id = c;
    for (std::size_t j = 0; j < n; ++j)
      if (result.labels[j] == c) cat.members.push_back(m.senses()[j]);
    out.push_back(std::move(cat));
  }
  return out;
}

// Sense label -> category id; senses not in any category map to -1.
inline std::map<std::string, int> category_index(const std::vector<WordCategory>& categories) {
  std::map<std::string, int> out;
  for (const auto& c : categories)
    for (const auto& s : c.members) out[s.label()] = c.id;
  return out;
}

struct TaggedToken {
  std::string word;
  std::size_t sense = 0;
  int category = kUncategorized;

  friend bool operator==(const TaggedToken&, const TaggedToken&) = default;
};

using TaggedSentence = std::vector<TaggedToken>;

// Annotates each token with its sense (nearest centroid of the row where the
// token is the blank) and the category of that sense.
inline std::vector<TaggedSentence> category_tag_corpus(const Corpus& corpus, const ProbMatrix& m,
                                                       const SenseInventory& senses,
                                                       const std::vector<WordCategory>& categories) {
  const auto index = category_index(categories);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> row_of;
  for (std::size_t i = 0; i < m.row_count(); ++i)
    for (const auto& occ : m.rows()[i].occurrences) row_of[{occ.sentence_id, occ.position}] = i;

  std::vector<TaggedSentence> out;
  out.reserve(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    TaggedSentence tagged;
    for (std::size_t p = 0; p < corpus[s].size(); ++p) {
      TaggedToken tok{corpus[s][p], 0, kUncategorized};
      auto it = senses.find(tok.word);
      auto row = row_of.find({s, p});
      if (it != senses.end() && it->second.sense_count() > 1 && row != row_of.end())
        tok.sense = nearest_centroid(probability_direction(m.row(row->second)), it->second.centroids);
      if (auto c = index.find(SenseId{tok.word, tok.sense}.label()); c != index.end())
        tok.category = c->second;
      tagged.push_back(std::move(tok));
    }
    out.push_back(std::move(tagged));
  }
  return out;
}

// Tags against a fixed word -> category table (no sense resolution).
inline std::vector<TaggedSentence> tag_with_lexicon(const Corpus& corpus,
                                                    const std::map<std::string, int>& word_category) {
  std::vector<TaggedSentence> out;
  for (const auto& s : corpus) {
    TaggedSentence tagged;
    for (const auto& w : s) {
      auto it = word_category.find(w);
      tagged.push_back({w, 0, it == word_category.end() ? kUncategorized : it->second});
    }
    out.push_back(std::move(tagged));
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<WordCategory>& categories) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& c : categories) {
    auto& arr = j[std::to_string(c.id)] = nlohmann::json::array();
    for (const auto& s : c.members) arr.push_back(s.label());
  }
  return j;
}

// "Cluster #<id>: [w, w, ]" listing, one line per category.
inline void write_listing(std::ostream& out, const std::vector<WordCategory>& categories) {
  for (const auto& c : categories) {
    out << "Cluster #" << c.id << ": [";
    for (const auto& s : c.members) out << s.word << ", ";
    out << "]\n";
  }
}

}  // namespace gramforge
