#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace gramforge {

// One corpus occurrence of a word, tied to the matrix row in which the
// occurrence is the blank.
struct WordInstance {
  std::string word;
  std::size_t sentence_id = 0;
  std::size_t position = 0;
  std::size_t row_index = 0;

  friend bool operator==(const WordInstance&, const WordInstance&) = default;
};

// Senses induced for one word: unit-norm centroids over the vocabulary axis
// of the probability matrix, plus the sense each clustered instance got.
struct SenseModel {
  std::string word;
  std::vector<std::vector<double>> centroids;
  std::vector<WordInstance> instances;
  std::vector<std::size_t> assignments;  // parallel to instances
  std::uint64_t seed = 0;
  bool degenerate = false;  // requested k > 1 but all instance vectors coincide
  bool exempt = false;      // excluded from disambiguation (frequency filter)

  std::size_t sense_count() const noexcept { return centroids.size(); }
};

using SenseInventory = std::map<std::string, SenseModel>;

inline nlohmann::json to_json(const SenseModel& m) {
  nlohmann::json j;
  j["word"] = m.word;
  j["seed"] = m.seed;
  j["degenerate"] = m.degenerate;
  j["exempt"] = m.exempt;
  j["centroids"] = m.centroids;
  auto& a = j["assignments"] = nlohmann::json::array();
  for (std::size_t i = 0; i < m.instances.size(); ++i) {
    const auto& inst = m.instances[i];
    a.push_back({{"sentence_id", inst.sentence_id},
                 {"position", inst.position},
                 {"row", inst.row_index},
                 {"sense", m.assignments[i]}});
  }
  return j;
}

inline SenseModel sense_model_from_json(const nlohmann::json& j) {
  SenseModel m;
  m.word = j.at("word").get<std::string>();
  m.seed = j.value("seed", std::uint64_t{0});
  m.degenerate = j.value("degenerate", false);
  m.exempt = j.value("exempt", false);
  m.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
  for (const auto& a : j.at("assignments")) {
    m.instances.push_back({m.word, a.at("sentence_id").get<std::size_t>(),
                           a.at("position").get<std::size_t>(), a.at("row").get<std::size_t>()});
    m.assignments.push_back(a.at("sense").get<std::size_t>());
  }
  return m;
}

inline nlohmann::json to_json(const SenseInventory& inventory) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [_, m] : inventory) j.push_back(to_json(m));
  return j;
}

inline SenseInventory sense_inventory_from_json(const nlohmann::json& j) {
  SenseInventory inv;
  for (const auto& item : j) {
    auto m = sense_model_from_json(item);
    auto word = m.word;
    inv.emplace(std::move(word), std::move(m));
  }
  return inv;
}

}  // namespace gramforge
