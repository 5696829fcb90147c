#include <atomic>
#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "gramforge/ngram.hpp"
#include "gramforge/remote_oracle.hpp"

using namespace gramforge;

namespace {

// Minimal stand-in for the masked-LM service, answering from an n-gram model.
class FakeService {
 public:
  explicit FakeService(const NgramOracleModel& model) : model_(model) {
    server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(nlohmann::json{{"status", "ok"}, {"model_id", "fake-ngram"}}.dump(), "application/json");
    });
    server_.Post("/v1/masked_predict", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [this](const nlohmann::json& body) { return answer(body); });
    });
    server_.Post("/v1/batch", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [this](const nlohmann::json& body) {
        ++batches;
        nlohmann::json out = nlohmann::json::array();
        for (const auto& item : body) out.push_back(answer(item));
        return out;
      });
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> status{200};
  std::atomic<bool> garble{false};
  std::atomic<int> delay_ms{0};
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  std::atomic<int> batches{0};
  std::atomic<int> requests{0};
  nlohmann::json last_request;
  std::mutex mutex;

 private:
  template <typename F>
  void handle(const httplib::Request& req, httplib::Response& res, F f) {
    ++requests;
    const int now = ++active;
    for (int p = peak; now > p && !peak.compare_exchange_weak(p, now);) {
    }
    if (delay_ms) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    auto body = nlohmann::json::parse(req.body);
    {
      std::lock_guard lock(mutex);
      last_request = body;
    }
    if (status != 200) {
      res.status = status;
      res.set_content("model not ready", "text/plain");
    } else if (garble) {
      res.set_content("{not json", "application/json");
    } else {
      res.set_content(f(body).dump(), "application/json");
    }
    --active;
  }

  nlohmann::json answer(const nlohmann::json& body) const {
    MaskedQuery q;
    q.target = body.at("target_position").get<std::size_t>();
    for (const auto& t : body.at("tokens")) {
      const auto s = t.get<std::string>();
      if (s == "[MASK]") q.tokens.emplace_back(std::nullopt);
      else q.tokens.emplace_back(s);
    }
    nlohmann::json probs = nlohmann::json::object(), note = nlohmann::json::object();
    for (const auto& c : body.at("candidates")) {
      const auto w = c.get<std::string>();
      probs[w] = w == "zero" ? 0.0 : std::exp(model_.masked_logprob(q, w));
      note[w] = 1;
    }
    return {{"probabilities", probs}, {"model_id", "fake-ngram"}, {"tokenization_note", note}};
  }

  const NgramOracleModel& model_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

const NgramOracleModel& model() {
  static const auto m = [] {
    Corpus c;
    for (auto* s : {"she answered quickly", "he answered slowly", "she asked quickly", "they asked"})
      c.push_back(TokenSequence::from_text(s));
    return NgramOracleModel::train(c, 2, 0.1);
  }();
  return m;
}

RemoteOracle client(const FakeService& s, std::size_t inflight = 4) {
  return RemoteOracle({s.endpoint(), 5.0, inflight});
}

}  // namespace

TEST(RemoteOracle, RequestBodyUsesMaskSentinel) {
  const auto q = MaskedQuery::prefix_visible(TokenSequence::from_text("she answered quickly"), 1);
  const std::vector<std::string> cands{"answered"};
  const auto body = RemoteOracle::request_body(q, cands);
  EXPECT_EQ(body.at("tokens"), nlohmann::json::array({"she", "[MASK]", "[MASK]"}));
  EXPECT_EQ(body.at("target_position"), 1);
  EXPECT_EQ(body.at("candidates"), nlohmann::json::array({"answered"}));
}

TEST(RemoteOracle, ScoresMatchDirectModel) {
  FakeService service(model());
  auto remote = client(service);
  for (auto* text : {"she answered quickly", "they asked slowly", "he asked"}) {
    const auto s = TokenSequence::from_text(text);
    const auto direct = sequence_score(model(), s);
    const auto via = sequence_score(remote, s);
    EXPECT_NEAR(via.forward_logprob, direct.forward_logprob, 1e-9);
    EXPECT_NEAR(via.backward_logprob, direct.backward_logprob, 1e-9);
    EXPECT_NEAR(via.combined_logprob, direct.combined_logprob, 1e-9);
  }
  std::lock_guard lock(service.mutex);
  EXPECT_EQ(service.last_request.at("tokens").size(), 2u);
}

TEST(RemoteOracle, MultipleCandidatesInOneCall) {
  FakeService service(model());
  auto remote = client(service);
  const auto q = MaskedQuery::prefix_visible(TokenSequence::from_text("she answered"), 1);
  const std::vector<std::string> cands{"answered", "asked", "zero"};
  const auto got = remote.masked_logprobs(q, cands);
  EXPECT_NEAR(got[0], model().masked_logprob(q, "answered"), 1e-12);
  EXPECT_NEAR(got[1], model().masked_logprob(q, "asked"), 1e-12);
  EXPECT_TRUE(std::isinf(got[2]) && got[2] < 0);
}

TEST(RemoteOracle, BatchPreservesOrder) {
  FakeService service(model());
  auto remote = client(service);
  const auto s = TokenSequence::from_text("she asked quickly");
  std::vector<MaskedQuery> qs;
  std::vector<std::string> toks;
  for (std::size_t i = 0; i < s.size(); ++i) {
    qs.push_back(MaskedQuery::suffix_visible(s, i));
    toks.push_back(s[i]);
  }
  qs.push_back(qs[0]);
  toks.push_back(toks[0]);
  const auto batch = remote.batch_logprobs(qs, toks);
  ASSERT_EQ(batch.size(), qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) EXPECT_EQ(batch[i], remote.masked_logprob(qs[i], toks[i]));
  EXPECT_EQ(batch.front(), batch.back());
  EXPECT_EQ(service.batches, 1);
  EXPECT_THROW(remote.batch_logprobs(qs, {"x"}), DataError);
}

TEST(RemoteOracle, HealthAndModelId) {
  FakeService service(model());
  auto remote = client(service);
  EXPECT_NE(remote.id().find(service.endpoint()), std::string::npos);
  EXPECT_EQ(remote.health(), "fake-ngram");
  EXPECT_EQ(remote.id(), "fake-ngram");
}

TEST(RemoteOracle, FailuresBecomeOracleUnavailable) {
  FakeService service(model());
  auto remote = client(service);
  const auto q = MaskedQuery::prefix_visible(TokenSequence::from_text("she answered"), 0);
  service.status = 503;
  EXPECT_THROW(remote.masked_logprob(q, "she"), OracleUnavailable);
  service.status = 200;
  service.garble = true;
  EXPECT_THROW(remote.masked_logprob(q, "she"), OracleUnavailable);
  service.garble = false;
  EXPECT_NO_THROW(remote.masked_logprob(q, "she"));

  RemoteOracle nowhere({"http://127.0.0.1:1", 0.5, 1});
  EXPECT_THROW(nowhere.masked_logprob(q, "she"), OracleUnavailable);
  EXPECT_THROW(nowhere.health(), OracleUnavailable);
  // An invalid query never reaches the wire.
  MaskedQuery bad{{std::string("she")}, 0};
  EXPECT_THROW(remote.masked_logprob(bad, "she"), DataError);
}

TEST(RemoteOracle, InflightLimitIsRespected) {
  FakeService service(model());
  service.delay_ms = 30;
  auto remote = client(service, 2);
  const auto q = MaskedQuery::prefix_visible(TokenSequence::from_text("she answered"), 1);
  std::vector<std::jthread> workers;
  for (int t = 0; t < 6; ++t) workers.emplace_back([&] { remote.masked_logprob(q, "answered"); });
  workers.clear();
  EXPECT_LE(service.peak.load(), 2);
  EXPECT_GE(service.peak.load(), 1);
}

TEST(RemoteOracle, CachingAvoidsRepeatRoundTrips) {
  FakeService service(model());
  auto remote = std::make_shared<RemoteOracle>(RemoteOracle::Options{service.endpoint(), 5.0, 4});
  CachingOracle cached(remote);
  const auto s = TokenSequence::from_text("she answered quickly");
  const auto first = sequence_score(cached, s).combined_logprob;
  const int round_trips = service.requests;
  EXPECT_EQ(round_trips, 6);  // three forward and three backward queries
  EXPECT_EQ(sequence_score(cached, s).combined_logprob, first);
  EXPECT_EQ(service.requests, round_trips);
}
