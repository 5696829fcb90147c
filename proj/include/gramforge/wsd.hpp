#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gramforge/probmatrix.hpp"
#include "gramforge/random.hpp"
#include "gramforge/sense_model.hpp"
#include "gramforge/vecmath.hpp"

namespace gramforge {

// Every occurrence of `word`, each pointing at the row where it is the blank.
inline std::vector<WordInstance> collect_instances(const ProbMatrix& m, const std::string& word) {
  std::vector<WordInstance> out;
  for (std::size_t i = 0; i < m.row_count(); ++i)
    for (const auto& occ : m.rows()[i].occurrences)
      if (occ.word == word) out.push_back({word, occ.sentence_id, occ.position, i});
  if (out.empty()) throw DataError("word '" + word + "' does not occur in the corpus");
  std::sort(out.begin(), out.end(), [](const WordInstance& a, const WordInstance& b) {
    return std::tie(a.sentence_id, a.position) < std::tie(b.sentence_id, b.position);
  });
  return out;
}

// The ceil(fraction * |V|) most frequent words; ties by lexicographic order.
inline std::set<std::string> frequency_filter(const Corpus& corpus, double fraction = 0.10) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("filter fraction must be in [0, 1)");
  std::map<std::string, std::size_t> freq;
  for (const auto& s : corpus)
    for (const auto& t : s) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  // The epsilon keeps 0.1 * 30 from rounding up to 4.
  const auto n = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(ranked.size()) - 1e-9));
  std::set<std::string> out;
  for (std::size_t i = 0; i < n && i < ranked.size(); ++i) out.insert(ranked[i].first);
  return out;
}

struct SphericalKMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> labels;
  double objective = 0.0;                // sum of cosine similarity to own centroid
  std::vector<double> objective_trace;   // objective after each assignment step
  std::size_t iterations = 0;
};

namespace detail {

inline std::vector<std::vector<double>> spherical_seed(std::span<const std::vector<double>> points,
                                                       std::size_t k, Rng& rng) {
  std::vector<std::vector<double>> centers;
  centers.push_back(points[uniform_index(rng, points.size())]);
  std::vector<double> dist(points.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, cosine_distance(points[i], c));
      dist[i] = best * best;
      total += dist[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = uniform_index(rng, points.size());
    } else {
      double r = uniform_unit(rng) * total;
      for (pick = 0; pick + 1 < points.size(); ++pick) {
        if (r < dist[pick]) break;
        r -= dist[pick];
      }
    }
    centers.push_back(points[pick]);
  }
  return centers;
}

inline SphericalKMeansResult spherical_run(std::span<const std::vector<double>> points,
                                           std::size_t k, Rng& rng, std::size_t max_iters) {
  SphericalKMeansResult res;
  res.centroids = spherical_seed(points, k, rng);
  res.labels.assign(points.size(), k);
  const std::size_t dim = points.front().size();
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double objective = 0.0;
    std::vector<double> sims(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::size_t c = nearest_centroid(points[i], res.centroids);
      sims[i] = dot(points[i], res.centroids[c]);
      objective += sims[i];
      if (c != res.labels[i]) {
        res.labels[i] = c;
        changed = true;
      }
    }
    res.objective_trace.push_back(objective);
    res.iterations = iter + 1;
    if (!changed && iter > 0) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++sizes[res.labels[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[res.labels[i]][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0 || norm2(sums[c]) == 0.0) {
        // Empty cluster: take over the worst-fitting point.
        const auto worst = static_cast<std::size_t>(
            std::min_element(sims.begin(), sims.end()) - sims.begin());
        res.centroids[c] = points[worst];
        sims[worst] = 1.0;
        res.labels[worst] = c;
      } else {
        res.centroids[c] = unit_normalized(std::move(sums[c]));
      }
    }
  }
  res.objective = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    res.objective += dot(points[i], res.centroids[res.labels[i]]);
  return res;
}

}  // namespace detail

// Spherical k-means on unit vectors; the best of `restarts` seeded runs.
inline SphericalKMeansResult spherical_kmeans(std::span<const std::vector<double>> points,
                                              std::size_t k, std::uint64_t seed,
                                              std::size_t max_iters = 100, std::size_t restarts = 10) {
  if (points.empty() || k == 0) throw DataError("spherical k-means needs points and k >= 1");
  Rng rng(seed);
  SphericalKMeansResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    auto res = detail::spherical_run(points, k, rng, max_iters);
    if (res.objective > best.objective + 1e-12) best = std::move(res);
  }
  return best;
}

struct SenseClusteringOptions {
  std::size_t max_iters = 100;
  std::size_t restarts = 10;
};

// Clusters instance vectors (rows of the matrix, in probability space and
// unit-normalized) into at most k senses.
inline SenseModel cluster_senses(const std::string& word, std::vector<WordInstance> instances,
                                 const std::vector<std::vector<double>>& vectors, std::size_t k,
                                 std::uint64_t seed, const SenseClusteringOptions& opts = {}) {
  if (instances.empty()) throw DataError("cluster_senses needs at least one instance");
  if (k == 0) throw ConfigError("number of senses must be >= 1");
  if (vectors.size() != instances.size()) throw DataError("instance/vector count mismatch");

  SenseModel model;
  model.word = word;
  model.seed = seed;
  model.instances = std::move(instances);

  std::vector<std::vector<double>> points;
  points.reserve(vectors.size());
  for (const auto& v : vectors) points.push_back(unit_normalized(v));

  // Distinct directions, first-seen order.
  std::vector<std::size_t> distinct;
  std::vector<std::size_t> distinct_of(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t d = 0;
    for (; d < distinct.size(); ++d)
      if (cosine_distance(points[i], points[distinct[d]]) <= 1e-12) break;
    if (d == distinct.size()) distinct.push_back(i);
    distinct_of[i] = d;
  }

  if (k > 1 && distinct.size() == 1 && points.size() > 1) model.degenerate = true;

  if (k == 1 || distinct.size() == 1) {
    std::vector<double> mean(points.front().size(), 0.0);
    for (const auto& p : points)
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += p[d];
    model.centroids.push_back(unit_normalized(std::move(mean)));
    model.assignments.assign(points.size(), 0);
    return model;
  }
  if (points.size() < k || distinct.size() <= k) {
    // Not enough material for k clusters: one sense per distinct vector.
    for (auto idx : distinct) model.centroids.push_back(points[idx]);
    model.assignments = distinct_of;
    return model;
  }
  auto res = spherical_kmeans(points, k, seed, opts.max_iters, opts.restarts);
  model.centroids = std::move(res.centroids);
  model.assignments = std::move(res.labels);
  return model;
}

inline SenseModel cluster_senses(const ProbMatrix& m, std::vector<WordInstance> instances,
                                 std::size_t k, std::uint64_t seed,
                                 const SenseClusteringOptions& opts = {}) {
  if (instances.empty()) throw DataError("cluster_senses needs at least one instance");
  std::vector<std::vector<double>> vectors;
  for (const auto& inst : instances) vectors.push_back(probability_direction(m.row(inst.row_index)));
  auto word = instances.front().word;
  return cluster_senses(word, std::move(instances), vectors, k, seed, opts);
}

// Maximum-weight assignment on a square matrix (Hungarian algorithm). Returns
// for each row the column it is matched to.
inline std::vector<std::size_t> max_weight_matching(const std::vector<std::vector<double>>& weight) {
  const std::size_t n = weight.size();
  const double inf = std::numeric_limits<double>::infinity();
  // Minimization on cost = -weight, 1-based potentials.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weight[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> match(n);
  for (std::size_t j = 1; j <= n; ++j) match[p[j] - 1] = j - 1;
  return match;
}

// Micro-averaged F1 after aligning predicted clusters to gold senses one to
// one so that agreement is maximal. Instances in a cluster left without a
// gold partner count as unpredicted.
inline double wsd_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
  if (predicted.size() != gold.size())
    throw DataError("wsd_f1: predicted and gold label lists differ in length");
  if (predicted.empty()) throw DataError("wsd_f1: empty evaluation set");
  const std::size_t np = *std::max_element(predicted.begin(), predicted.end()) + 1;
  const std::size_t ng = *std::max_element(gold.begin(), gold.end()) + 1;
  const std::size_t n = std::max(np, ng);
  std::vector<std::vector<double>> counts(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < predicted.size(); ++i) counts[predicted[i]][gold[i]] += 1.0;
  const auto match = max_weight_matching(counts);
  double tp = 0.0, predicted_count = 0.0;
  std::vector<std::size_t> cluster_size(n, 0);
  for (auto p : predicted) ++cluster_size[p];
  for (std::size_t c = 0; c < n; ++c) {
    if (match[c] >= ng) continue;  // matched to a padding gold label
    tp += counts[c][match[c]];
    predicted_count += static_cast<double>(cluster_size[c]);
  }
  const double total = static_cast<double>(predicted.size());
  const double precision = predicted_count > 0.0 ? tp / predicted_count : 0.0;
  const double recall = tp / total;
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

struct WsdConfig {
  std::size_t k = 2;
  std::map<std::string, std::size_t> per_word_k;
  double filter_fraction = 0.10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  SenseClusteringOptions clustering;
};

// Sense models for every corpus word that has a matrix column. Words in the
// frequency-filter set get a single sense.
inline SenseInventory induce_senses(const ProbMatrix& m, const Corpus& corpus, const WsdConfig& config) {
  const auto exempt = frequency_filter(corpus, config.filter_fraction);
  std::vector<std::string> words;
  for (const auto& w : corpus_vocabulary(corpus))
    if (m.column_of(w)) words.push_back(w);
  std::vector<SenseModel> models(words.size());
  parallel_for(words.size(), config.jobs, [&](std::size_t idx) {
    const auto& w = words[idx];
    auto k = config.k;
    if (auto it = config.per_word_k.find(w); it != config.per_word_k.end()) k = it->second;
    const bool is_exempt = exempt.count(w) > 0;
    if (is_exempt) k = 1;
    models[idx] = cluster_senses(m, collect_instances(m, w), k, derive_seed(config.seed, w),
                                 config.clustering);
    models[idx].exempt = is_exempt;
  });
  SenseInventory inv;
  for (auto& model : models) {
    auto word = model.word;
    inv.emplace(std::move(word), std::move(model));
  }
  return inv;
}

}  // namespace gramforge
