#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "gramforge/error.hpp"
#include "gramforge/induction.hpp"
#include "gramforge/optics.hpp"
#include "gramforge/random.hpp"
#include "gramforge/wsd.hpp"

namespace gramforge {

// Flat view of a TOML-style file: "[section]" headers, "key = value" lines,
// '#' comments. Values are quoted strings, integers, floats or booleans;
// keys come out as "section.key".
using ConfigValue = std::variant<std::string, std::int64_t, double, bool>;
using ConfigTable = std::map<std::string, ConfigValue>;

namespace detail {

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline ConfigValue parse_value(const std::string& raw, std::size_t lineno) {
  const auto v = trim(raw);
  auto fail = [&] { return ConfigError("line " + std::to_string(lineno) + ": cannot parse value '" + v + "'"); };
  if (v.empty()) throw fail();
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw fail();
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        const char n = v[++i];
        out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
      } else {
        out += v[i];
      }
    }
    return out;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  std::size_t used = 0;
  try {
    if (v.find_first_of(".eE") == std::string::npos) {
      const auto i = std::stoll(v, &used);
      if (used == v.size()) return static_cast<std::int64_t>(i);
    } else {
      const auto d = std::stod(v, &used);
      if (used == v.size()) return d;
    }
  } catch (const std::exception&) {
  }
  throw fail();
}

}  // namespace detail

inline ConfigTable parse_config(std::istream& in) {
  ConfigTable out;
  std::string section, line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(detail::strip_comment(line));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[section.empty() ? key : section + "." + key] = detail::parse_value(t.substr(eq + 1), lineno);
  }
  return out;
}

inline ConfigTable load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  return parse_config(in);
}

struct OracleSpec {
  std::string kind = "ngram";  // ngram | remote
  int order = 3;
  double smoothing_k = 0.1;
  std::string model_path;  // saved n-gram model; trained from the corpus when empty
  std::string endpoint = "http://127.0.0.1:8080";
  double timeout_seconds = 30.0;
  std::size_t max_inflight = 4;
};

struct PipelineConfig {
  std::string corpus_path;
  OracleSpec oracle;
  WsdConfig wsd;
  OpticsParams optics;
  InductionConfig induction;
  std::string output_dir = "gramforge-out";
  std::string log_level = "info";
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::size_t jobs = 1;

  PipelineConfig() { induction.rng_seed = 0; }

  // Component seeds left at 0 are derived from the master seed.
  void resolve_seeds() {
    if (wsd.seed == 0) wsd.seed = derive_seed(seed, "wsd");
    if (induction.rng_seed == 0) induction.rng_seed = derive_seed(seed, "induction");
  }

  // Applies a flat table on top of the current values; unknown keys are
  // errors so typos do not pass silently.
  void apply(const ConfigTable& table) {
    for (const auto& [key, value] : table) set(key, value);
  }

  void set(const std::string& key, const ConfigValue& value) {
    auto str = [&]() -> std::string {
      if (auto* s = std::get_if<std::string>(&value)) return *s;
      throw ConfigError("'" + key + "' must be a string");
    };
    auto num = [&]() -> double {
      if (auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
      if (auto* d = std::get_if<double>(&value)) return *d;
      throw ConfigError("'" + key + "' must be a number");
    };
    auto count = [&]() -> std::uint64_t {
      auto* i = std::get_if<std::int64_t>(&value);
      if (!i || *i < 0) throw ConfigError("'" + key + "' must be a non-negative integer");
      return static_cast<std::uint64_t>(*i);
    };
    auto flag = [&]() -> bool {
      if (auto* b = std::get_if<bool>(&value)) return *b;
      throw ConfigError("'" + key + "' must be true or false");
    };

    if (key == "corpus.path" || key == "corpus") corpus_path = str();
    else if (key == "output.dir" || key == "output_dir") output_dir = str();
    else if (key == "log_level") log_level = str();
    else if (key == "seed") {
      seed = count();
      seed_given = true;
    }
    else if (key == "jobs") jobs = count();
    else if (key == "oracle.kind") oracle.kind = str();
    else if (key == "oracle.order") oracle.order = static_cast<int>(count());
    else if (key == "oracle.k") oracle.smoothing_k = num();
    else if (key == "oracle.model") oracle.model_path = str();
    else if (key == "oracle.endpoint") oracle.endpoint = str();
    else if (key == "oracle.timeout") oracle.timeout_seconds = num();
    else if (key == "oracle.max_inflight") oracle.max_inflight = count();
    else if (key == "wsd.k") wsd.k = count();
    else if (key == "wsd.filter_fraction") wsd.filter_fraction = num();
    else if (key == "wsd.seed") wsd.seed = count();
    else if (key == "categories.min_samples") optics.min_samples = count();
    else if (key == "categories.xi") optics.xi = num();
    else if (key == "categories.min_cluster_size") optics.min_cluster_size = count();
    else if (key == "categories.predecessor_correction") optics.predecessor_correction = flag();
    else if (key == "induction.samples_per_rule") induction.samples_per_rule = count();
    else if (key == "induction.threshold") induction.threshold = num();
    else if (key == "induction.max_len") induction.max_len = count();
    else if (key == "induction.seed") induction.rng_seed = count();
    else if (key == "induction.min_support") induction.min_support = count();
    else if (key == "induction.mode") {
      const auto m = str();
      if (m == "mutation") induction.mode = EvaluationMode::mutation;
      else if (m == "reference") induction.mode = EvaluationMode::reference;
      else throw ConfigError("induction.mode must be 'mutation' or 'reference'");
    } else if (key == "induction.length_normalization") {
      const auto m = str();
      if (m == "per-token") induction.length_normalization = LengthNormalization::per_token;
      else if (m == "none") induction.length_normalization = LengthNormalization::none;
      else throw ConfigError("induction.length_normalization must be 'per-token' or 'none'");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  void validate(bool need_corpus) const {
    namespace fs = std::filesystem;
    if (need_corpus) {
      if (corpus_path.empty()) throw ConfigError("no corpus given");
      if (!fs::exists(corpus_path)) throw ConfigError("corpus '" + corpus_path + "' does not exist");
    }
    if (oracle.kind != "ngram" && oracle.kind != "remote")
      throw ConfigError("oracle.kind must be 'ngram' or 'remote'");
    if (oracle.order < 1) throw ConfigError("oracle.order must be >= 1");
    if (!(oracle.smoothing_k > 0.0)) throw ConfigError("oracle.k must be > 0");
    if (!oracle.model_path.empty() && !fs::exists(oracle.model_path))
      throw ConfigError("oracle model '" + oracle.model_path + "' does not exist");
    if (!(oracle.timeout_seconds > 0.0)) throw ConfigError("oracle.timeout must be > 0");
    if (wsd.k < 1) throw ConfigError("wsd.k must be >= 1");
    if (!(wsd.filter_fraction >= 0.0 && wsd.filter_fraction <= 1.0))
      throw ConfigError("wsd.filter_fraction must be in [0, 1]");
    if (optics.min_samples < 2) throw ConfigError("categories.min_samples must be >= 2");
    if (!(optics.xi > 0.0 && optics.xi < 1.0)) throw ConfigError("categories.xi must be in (0, 1)");
    induction.validate();
    static const std::set<std::string> levels{"debug", "info", "warn", "error"};
    if (!levels.count(log_level)) throw ConfigError("log_level must be one of debug, info, warn, error");
  }

  // Canonical form: everything that influences results (not the output
  // location or logging).
  nlohmann::json to_json() const {
    return {{"corpus", corpus_path},
            {"seed", seed},
            {"oracle",
             {{"kind", oracle.kind},
              {"order", oracle.order},
              {"k", oracle.smoothing_k},
              {"model", oracle.model_path},
              {"endpoint", oracle.endpoint},
              {"timeout", oracle.timeout_seconds},
              {"max_inflight", oracle.max_inflight}}},
            {"wsd", {{"k", wsd.k}, {"filter_fraction", wsd.filter_fraction}, {"seed", wsd.seed}}},
            {"categories",
             {{"min_samples", optics.min_samples},
              {"xi", optics.xi},
              {"min_cluster_size", optics.min_cluster_size},
              {"predecessor_correction", optics.predecessor_correction}}},
            {"induction",
             {{"samples_per_rule", induction.samples_per_rule},
              {"threshold", induction.threshold},
              {"max_len", induction.max_len},
              {"seed", induction.rng_seed},
              {"mode", to_string(induction.mode)},
              {"length_normalization", to_string(induction.length_normalization)},
              {"min_support", induction.min_support}}}};
  }

  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
    return buf;
  }
};

// Config file path: explicit flag, else $GRAMFORGE_CONFIG, else none.
inline std::optional<std::filesystem::path> resolve_config_path(const std::string& flag) {
  if (!flag.empty()) return std::filesystem::path(flag);
  if (const char* env = std::getenv("GRAMFORGE_CONFIG"); env && *env) return std::filesystem::path(env);
  return std::nullopt;
}

inline constexpr std::string_view kVersion = "0.1.0";

// Written next to every artifact set; no timestamps, so reruns are identical.
inline nlohmann::json make_manifest(const std::string& subcommand, const PipelineConfig& config,
                                    const nlohmann::json& seeds, const std::vector<std::string>& artifacts) {
  return {{"tool", "gramforge"},
          {"version", std::string(kVersion)},
          {"subcommand", subcommand},
          {"config", config.to_json()},
          {"config_hash", config.hash()},
          {"seeds", seeds},
          {"artifacts", artifacts}};
}

}  // namespace gramforge
