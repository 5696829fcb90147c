#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "gramforge/oracle.hpp"
#include "gramforge/parallel.hpp"

namespace gramforge {

// Client for the masked-LM HTTP service.
//
//   POST /v1/masked_predict  {"tokens": [...], "target_position": i, "candidates": [...]}
//     -> {"probabilities": {cand: p}, "model_id": "...", "tokenization_note": {cand: n}}
//   POST /v1/batch           [request, ...] -> [response, ...]
//   GET  /healthz            -> {"status": "...", "model_id": "..."}
//
// Masked positions travel as the literal "[MASK]".
class RemoteOracle final : public SequenceOracle {
 public:
  struct Options {
    std::string endpoint = "http://127.0.0.1:8080";
    double timeout_seconds = 30.0;
    std::size_t max_inflight = 8;
  };

  explicit RemoteOracle(Options options)
      : options_(std::move(options)), limiter_(options_.max_inflight) {}

  static nlohmann::json request_body(const MaskedQuery& query,
                                     std::span<const std::string> candidates) {
    nlohmann::json body;
    body["tokens"] = query.wire_tokens();
    body["target_position"] = query.target;
    body["candidates"] = std::vector<std::string>(candidates.begin(), candidates.end());
    return body;
  }

  double masked_logprob(const MaskedQuery& query, std::string_view token) const override {
    const std::string cand(token);
    return masked_logprobs(query, std::span<const std::string>(&cand, 1)).front();
  }

  std::vector<double> masked_logprobs(const MaskedQuery& query,
                                      std::span<const std::string> candidates) const override {
    query.validate();
    const auto response = post("/v1/masked_predict", request_body(query, candidates));
    return read_probabilities(response, candidates);
  }

  // One round trip for many queries; order preserved.
  std::vector<double> batch_logprobs(const std::vector<MaskedQuery>& queries,
                                     const std::vector<std::string>& tokens) const {
    if (queries.size() != tokens.size()) throw DataError("batch: queries/tokens size mismatch");
    nlohmann::json body = nlohmann::json::array();
    for (std::size_t i = 0; i < queries.size(); ++i) {
      queries[i].validate();
      body.push_back(request_body(queries[i], std::span<const std::string>(&tokens[i], 1)));
    }
    const auto response = post("/v1/batch", body);
    if (!response.is_array() || response.size() != queries.size())
      throw OracleUnavailable("batch response has wrong shape");
    std::vector<double> out;
    out.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i)
      out.push_back(read_probabilities(response[i], std::span<const std::string>(&tokens[i], 1)).front());
    return out;
  }

  std::string id() const override {
    std::lock_guard lock(id_mutex_);
    return model_id_.empty() ? "remote(" + options_.endpoint + ")" : model_id_;
  }

  // Returns the service's model id; throws OracleUnavailable if unhealthy.
  std::string health() const {
    auto client = make_client();
    auto result = client->Get("/healthz");
    if (!result) throw OracleUnavailable("oracle service unreachable at " + options_.endpoint);
    if (result->status != 200)
      throw OracleUnavailable("oracle health check returned HTTP " + std::to_string(result->status));
    auto body = parse(result->body);
    const auto model = body.value("model_id", std::string());
    std::lock_guard lock(id_mutex_);
    model_id_ = model;
    return model;
  }

 private:
  std::unique_ptr<httplib::Client> make_client() const {
    auto client = std::make_unique<httplib::Client>(options_.endpoint);
    const auto usec = static_cast<long>(options_.timeout_seconds * 1e6);
    client->set_connection_timeout(std::chrono::microseconds(usec));
    client->set_read_timeout(std::chrono::microseconds(usec));
    client->set_write_timeout(std::chrono::microseconds(usec));
    return client;
  }

  static nlohmann::json parse(const std::string& text) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw OracleUnavailable(std::string("malformed oracle response: ") + e.what());
    }
  }

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const {
    auto slot = limiter_.slot();
    auto client = make_client();
    auto result = client->Post(path, body.dump(), "application/json");
    if (!result)
      throw OracleUnavailable("oracle service unreachable at " + options_.endpoint + path + " (" +
                              httplib::to_string(result.error()) + ")");
    if (result->status != 200)
      throw OracleUnavailable("oracle service returned HTTP " + std::to_string(result->status) +
                              " for " + path + ": " + result->body);
    return parse(result->body);
  }

  std::vector<double> read_probabilities(const nlohmann::json& response,
                                         std::span<const std::string> candidates) const {
    if (!response.is_object() || !response.contains("probabilities"))
      throw OracleUnavailable("oracle response lacks 'probabilities'");
    if (response.contains("model_id")) {
      std::lock_guard lock(id_mutex_);
      model_id_ = response["model_id"].get<std::string>();
    }
    const auto& probs = response["probabilities"];
    std::vector<double> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates) {
      if (!probs.contains(c)) throw OracleUnavailable("oracle response missing candidate '" + c + "'");
      const double p = probs[c].get<double>();
      if (!(p >= 0.0 && p <= 1.0)) throw OracleUnavailable("oracle returned probability outside [0,1]");
      out.push_back(p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity());
    }
    return out;
  }

  Options options_;
  mutable InflightLimiter limiter_;
  mutable std::mutex id_mutex_;
  mutable std::string model_id_;
};

}  // namespace gramforge
