// gramforge command-line driver.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gramforge/gramforge.hpp"

namespace fs = std::filesystem;
using namespace gramforge;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kOracle = 3, kData = 4 };

int g_verbosity = 1;  // 0 error, 1 warn/info, 2 debug

void log(int level, const std::string& msg) {
  if (level <= g_verbosity) std::cerr << "gramforge: " << msg << "\n";
}

// Plain text (one sentence per line) or JSON lines with a "tokens" array.
Corpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corpus '" + path + "'");
  Corpus out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    try {
      if (t.front() == '{') {
        const auto j = nlohmann::json::parse(t);
        out.emplace_back(j.at("tokens").get<std::vector<std::string>>());
      } else {
        out.push_back(TokenSequence::from_text(t));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw DataError("corpus '" + path + "' has no sentences");
  return out;
}

Grammar read_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read grammar '" + path + "'");
  return parse_grammar(in);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

struct Context {
  PipelineConfig config;
  std::string config_file;
  // flag overrides, applied after the file
  ConfigTable overrides;

  void load() {
    if (auto path = resolve_config_path(config_file)) {
      log(2, "config from " + path->string());
      config.apply(load_config_file(*path));
    }
    config.apply(overrides);
    g_verbosity = config.log_level == "debug" ? 2 : config.log_level == "error" ? 0 : 1;
  }

  fs::path out_dir() const {
    fs::path dir(config.output_dir);
    fs::create_directories(dir);
    return dir;
  }

  std::shared_ptr<SequenceOracle> oracle(const Corpus* corpus) const {
    const auto& spec = config.oracle;
    if (spec.kind == "remote") {
      auto remote = std::make_shared<RemoteOracle>(
          RemoteOracle::Options{spec.endpoint, spec.timeout_seconds, spec.max_inflight});
      return std::make_shared<CachingOracle>(remote);
    }
    std::shared_ptr<NgramOracleModel> model;
    if (!spec.model_path.empty()) {
      std::ifstream in(spec.model_path);
      if (!in) throw ConfigError("cannot read oracle model '" + spec.model_path + "'");
      model = std::make_shared<NgramOracleModel>(NgramOracleModel::load(in));
    } else {
      if (!corpus) throw ConfigError("the n-gram oracle needs --model or a corpus to train on");
      model = std::make_shared<NgramOracleModel>(NgramOracleModel::train(*corpus, spec.order, spec.smoothing_k));
    }
    return std::make_shared<CachingOracle>(model);
  }

  void manifest(const std::string& sub, const nlohmann::json& seeds, const std::vector<std::string>& artifacts) const {
    write_text(out_dir() / (sub + ".manifest.json"), make_manifest(sub, config, seeds, artifacts).dump(2) + "\n");
  }
};

template <typename T>
void override_on(CLI::Option* opt, Context& ctx, const std::string& key, const T& value) {
  if (opt->count() == 0) return;
  if constexpr (std::is_same_v<T, std::string>) ctx.overrides[key] = value;
  else if constexpr (std::is_floating_point_v<T>) ctx.overrides[key] = static_cast<double>(value);
  else ctx.overrides[key] = static_cast<std::int64_t>(value);
}

ProbMatrix build_matrix(const Context& ctx, const Corpus& corpus, const SequenceOracle& oracle) {
  FillOptions fill;
  fill.jobs = ctx.config.jobs;
  log(1, "filling matrix for " + std::to_string(corpus.size()) + " sentences");
  return fill_matrix(expand_corpus(corpus), corpus_vocabulary(corpus), oracle, fill);
}

void save_matrix(const fs::path& stem, const LabeledMatrix& m) {
  {
    std::ofstream out(stem.string() + ".csv", std::ios::binary);
    write_csv(out, m);
  }
  std::ofstream out(stem.string() + ".bin", std::ios::binary);
  write_binary(out, m);
}

struct Pipeline {
  ProbMatrix matrix;
  SenseInventory senses;
  SenseMatrix sense_matrix;
  std::vector<WordCategory> categories;
};

Pipeline run_through_categories(const Context& ctx, const Corpus& corpus, const SequenceOracle& oracle,
                                bool cluster) {
  Pipeline p;
  p.matrix = build_matrix(ctx, corpus, oracle);
  auto wsd = ctx.config.wsd;
  wsd.jobs = ctx.config.jobs;
  p.senses = induce_senses(p.matrix, corpus, wsd);
  p.sense_matrix = build_sense_matrix(p.matrix, p.senses);
  if (cluster) {
    CategoryParams params{ctx.config.optics, ctx.config.jobs};
    p.categories = cluster_categories(p.sense_matrix, params);
  }
  return p;
}

void print_report(std::ostream& out, const EvaluationReport& r) {
  out << to_string(r.verdict) << "  margin " << r.margin << "  (" << r.rule.text() << ")";
  if (!r.error.empty()) out << "  " << r.error;
  out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  CLI::App app{"Grammar induction with a sequence-probability oracle"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string corpus, out_dir, log_level, oracle_kind, model, endpoint;
  std::size_t jobs = 1;
  std::uint64_t seed = 1;
  int order = 3;
  double smoothing = 0.1;
  app.add_option("--config", ctx.config_file, "Config file (default: $GRAMFORGE_CONFIG)");
  auto* o_corpus = app.add_option("--corpus", corpus, "Corpus: one sentence per line, or JSON lines");
  auto* o_out = app.add_option("--out", out_dir, "Output directory");
  auto* o_log = app.add_option("--log-level", log_level, "debug, info, warn or error");
  auto* o_jobs = app.add_option("--jobs", jobs, "Worker threads");
  auto* o_seed = app.add_option("--seed", seed, "Master seed");
  auto* o_kind = app.add_option("--oracle", oracle_kind, "ngram or remote");
  auto* o_order = app.add_option("--order", order, "n-gram order");
  auto* o_k = app.add_option("--smoothing", smoothing, "n-gram add-k constant");
  auto* o_model = app.add_option("--model", model, "Saved n-gram model");
  auto* o_endpoint = app.add_option("--endpoint", endpoint, "Oracle service URL");

  auto* train = app.add_subcommand("train", "Train an n-gram oracle on the corpus and save it");

  auto* score = app.add_subcommand("score", "Forward, backward and combined log-probability of a sentence");
  std::string sentence;
  score->add_option("sentence", sentence, "Sentence (whitespace separated)")->required();

  auto* matrix = app.add_subcommand("matrix", "Build the blanked-sentence probability matrix");
  auto* wsd = app.add_subcommand("wsd", "Induce word senses and the sense matrix");
  std::size_t wsd_k = 0;
  auto* o_wsd_k = wsd->add_option("--k", wsd_k, "Senses per word");
  auto* categories = app.add_subcommand("categories", "Cluster sense columns into word categories");

  auto* induce = app.add_subcommand("induce", "Propose, evaluate and accumulate grammar rules");
  std::string lexicon_path, references_path;
  induce->add_option("--lexicon", lexicon_path, "JSON word -> category map (skips clustering)");
  induce->add_option("--references", references_path, "Reference corpus for reference mode");
  std::string terminator;
  induce->add_option("--terminator", terminator, "Sentence-final token kept out of rules (e.g. '.')");

  auto* eval = app.add_subcommand("eval-rule", "Evaluate one rule inside a grammar");
  std::string rule_text, grammar_path;
  eval->add_option("rule", rule_text, "Rule, e.g. 'kids: small- & the-'")->required();
  eval->add_option("--grammar", grammar_path, "Grammar file")->required();
  eval->add_option("--references", references_path, "Reference corpus (reference mode)");

  auto* gen = app.add_subcommand("generate", "Generate sentences from a grammar");
  std::size_t count = 10, max_len = 16;
  std::string anchor_text;
  gen->add_option("--grammar", grammar_path, "Grammar file")->required();
  gen->add_option("-n,--count", count, "Number of sentences");
  gen->add_option("--anchor", anchor_text, "Rule every sentence must use");
  gen->add_option("--max-len", max_len, "Maximum tokens");

  auto* parse_cmd = app.add_subcommand("parse", "Link-parse a sentence");
  parse_cmd->add_option("sentence", sentence, "Sentence")->required();
  parse_cmd->add_option("--grammar", grammar_path, "Grammar file")->required();

  auto* poc_cmd = app.add_subcommand("poc", "Run the toy-grammar rule evaluation and category experiments");
  std::string spurious = "mirror";
  poc_cmd->add_option("--spurious", spurious, "Spurious rule set: mirror or loop")
      ->check(CLI::IsMember({"mirror", "loop"}));
  bool skip_categories = false;
  poc_cmd->add_flag("--no-categories", skip_categories, "Only run the rule evaluation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    override_on(o_corpus, ctx, "corpus.path", corpus);
    override_on(o_out, ctx, "output.dir", out_dir);
    override_on(o_log, ctx, "log_level", log_level);
    override_on(o_jobs, ctx, "jobs", jobs);
    override_on(o_seed, ctx, "seed", seed);
    override_on(o_kind, ctx, "oracle.kind", oracle_kind);
    override_on(o_order, ctx, "oracle.order", order);
    override_on(o_k, ctx, "oracle.k", smoothing);
    override_on(o_model, ctx, "oracle.model", model);
    override_on(o_endpoint, ctx, "oracle.endpoint", endpoint);
    override_on(o_wsd_k, ctx, "wsd.k", wsd_k);
    ctx.load();
    auto& cfg = ctx.config;
    cfg.resolve_seeds();
    cfg.induction.jobs = cfg.jobs;

    const bool needs_corpus = train->parsed() || matrix->parsed() || wsd->parsed() || categories->parsed() ||
                              induce->parsed() ||
                              ((score->parsed() || eval->parsed()) && cfg.oracle.kind == "ngram" &&
                               cfg.oracle.model_path.empty());
    cfg.validate(needs_corpus);
    std::optional<Corpus> data;
    if (needs_corpus) data = read_corpus(cfg.corpus_path);
    const Corpus* corp = data ? &*data : nullptr;
    const nlohmann::json seeds{{"seed", cfg.seed}, {"wsd", cfg.wsd.seed}, {"induction", cfg.induction.rng_seed}};

    if (train->parsed()) {
      const auto m = NgramOracleModel::train(*data, cfg.oracle.order, cfg.oracle.smoothing_k);
      std::ostringstream buf;
      m.save(buf);
      write_text(ctx.out_dir() / "oracle.ngram", buf.str());
      ctx.manifest("train", seeds, {"oracle.ngram"});
      std::cout << "trained order-" << m.order() << " model over " << m.outcome_space().size() << " outcomes\n";
    } else if (score->parsed()) {
      auto oracle = ctx.oracle(corp);
      const auto s = sequence_score(*oracle, TokenSequence::from_text(sentence));
      std::printf("forward  %.10f\nbackward %.10f\ncombined %.10f\n", s.forward_logprob, s.backward_logprob,
                  s.combined_logprob);
    } else if (matrix->parsed()) {
      auto oracle = ctx.oracle(corp);
      const auto m = build_matrix(ctx, *data, *oracle);
      save_matrix(ctx.out_dir() / "matrix", m.data());
      ctx.manifest("matrix", seeds, {"matrix.csv", "matrix.bin"});
      std::cout << m.row_count() << " rows x " << m.column_count() << " columns\n";
    } else if (wsd->parsed()) {
      auto oracle = ctx.oracle(corp);
      const auto p = run_through_categories(ctx, *data, *oracle, false);
      const auto dir = ctx.out_dir();
      save_matrix(dir / "matrix", p.matrix.data());
      save_matrix(dir / "sense_matrix", p.sense_matrix.data());
      write_text(dir / "senses.json", to_json(p.senses).dump(1) + "\n");
      ctx.manifest("wsd", seeds, {"matrix.csv", "matrix.bin", "sense_matrix.csv", "sense_matrix.bin", "senses.json"});
      for (const auto& [w, model_] : p.senses)
        std::cout << w << ": " << model_.sense_count() << (model_.exempt ? " (frequent, not split)" : "") << "\n";
    } else if (categories->parsed()) {
      auto oracle = ctx.oracle(corp);
      const auto p = run_through_categories(ctx, *data, *oracle, true);
      const auto dir = ctx.out_dir();
      save_matrix(dir / "sense_matrix", p.sense_matrix.data());
      write_text(dir / "senses.json", to_json(p.senses).dump(1) + "\n");
      write_text(dir / "categories.json", to_json(p.categories).dump(2) + "\n");
      std::ostringstream listing;
      write_listing(listing, p.categories);
      write_text(dir / "categories.txt", listing.str());
      ctx.manifest("categories", seeds, {"sense_matrix.csv", "sense_matrix.bin", "senses.json", "categories.json",
                                         "categories.txt"});
      std::cout << listing.str();
    } else if (induce->parsed()) {
      auto oracle = ctx.oracle(corp);
      std::vector<TaggedSentence> tagged;
      if (!lexicon_path.empty()) {
        std::ifstream in(lexicon_path);
        if (!in) throw DataError("cannot read lexicon '" + lexicon_path + "'");
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw DataError("lexicon must be a JSON object word -> category id");
        std::map<std::string, int> table;
        for (const auto& [w, c] : j.items()) table[w] = c.get<int>();
        tagged = tag_with_lexicon(*data, table);
      } else {
        const auto p = run_through_categories(ctx, *data, *oracle, true);
        tagged = category_tag_corpus(*data, p.matrix, p.senses, p.categories);
      }
      Grammar base;
      std::optional<std::string> term;
      if (!terminator.empty()) term = terminator;
      base.set_terminator(term);
      if (term)
        for (auto& sent : tagged)
          for (auto& t : sent)
            if (t.word == *term) t.category = kUncategorized;
      for (const auto& [cat, words] : owner_lexicon(tagged)) base.set_category(cat, words);
      const auto candidates = propose_rules(owner_tags(tagged), cfg.induction.min_support, term);
      log(1, std::to_string(candidates.size()) + " candidate rules");
      std::optional<Corpus> refs;
      if (cfg.induction.mode == EvaluationMode::reference)
        refs = references_path.empty() ? *data : read_corpus(references_path);
      const auto result = gramforge::induce(candidates, *oracle, cfg.induction, base, refs ? &*refs : nullptr);
      const auto dir = ctx.out_dir();
      std::ostringstream reports;
      write_jsonl(reports, result.reports);
      write_text(dir / "reports.jsonl", reports.str());
      write_text(dir / "grammar.dict", result.grammar.text());
      ctx.manifest("induce", seeds, {"reports.jsonl", "grammar.dict"});
      std::size_t accepted = 0;
      for (const auto& r : result.reports) accepted += r.verdict == Verdict::accept;
      std::cout << accepted << " of " << result.reports.size() << " candidates accepted\n";
    } else if (eval->parsed()) {
      auto oracle = ctx.oracle(corp);
      const auto grammar = read_grammar(grammar_path);
      const auto rule = parse_rule(rule_text);
      EvaluationReport report;
      if (cfg.induction.mode == EvaluationMode::reference || !references_path.empty()) {
        if (references_path.empty()) throw ConfigError("reference mode needs --references");
        report = evaluate_against_references(rule, grammar, *oracle, read_corpus(references_path), cfg.induction);
      } else {
        report = evaluate_rule(rule, grammar, *oracle, cfg.induction);
      }
      write_text(ctx.out_dir() / "eval-rule.jsonl", to_json(report).dump() + "\n");
      ctx.manifest("eval-rule", seeds, {"eval-rule.jsonl"});
      print_report(std::cout, report);
    } else if (gen->parsed()) {
      const auto grammar = read_grammar(grammar_path);
      GenerateOptions opts;
      opts.max_len = max_len;
      std::optional<Rule> anchor;
      if (!anchor_text.empty()) anchor = parse_rule(anchor_text);
      Rng rng(derive_seed(cfg.seed, "generate"));
      std::ostringstream out;
      for (std::size_t i = 0; i < count; ++i)
        out << generate(grammar, anchor ? &*anchor : nullptr, opts, rng).sentence.text() << "\n";
      write_text(ctx.out_dir() / "generated.txt", out.str());
      ctx.manifest("generate", seeds, {"generated.txt"});
      std::cout << out.str();
    } else if (parse_cmd->parsed()) {
      const auto grammar = read_grammar(grammar_path);
      const auto result = parse(TokenSequence::from_text(sentence), grammar);
      if (!result) {
        std::cout << "no linkage: " << result.diagnosis << "\n";
        return kData;
      }
      print_linkage(std::cout, *result.linkage);
    } else if (poc_cmd->parsed()) {
      poc::ExperimentConfig pc;
      if (cfg.seed_given) pc.seed = cfg.seed;
      pc.spurious = spurious == "loop" ? poc::SpuriousSet::loop : poc::SpuriousSet::mirror;
      pc.induction = cfg.induction;
      const auto result = poc::run_experiment(pc);
      const auto dir = ctx.out_dir();
      std::vector<EvaluationReport> reports;
      std::ostringstream summary;
      for (const auto& o : result.outcomes) {
        reports.push_back(o.report);
        summary << (o.spurious ? "spurious " : "correct  ");
        print_report(summary, o.report);
      }
      summary << "spurious rejected: " << result.spurious_rejected << "/" << result.spurious_total << "\n"
              << "correct rejected:  " << result.correct_rejected << "/" << result.correct_total << "\n";
      if (result.skipped) summary << "skipped: " << result.skipped << "\n";
      std::vector<std::string> artifacts{"poc-reports.jsonl", "poc-summary.txt"};
      if (!skip_categories) {
        poc::CategoryExperimentConfig cc;
        cc.categories.jobs = cfg.jobs;
        const auto cats = poc::run_category_experiment(cc);
        std::ostringstream listing;
        write_listing(listing, cats.categories);
        write_text(dir / "poc-categories.txt", listing.str());
        artifacts.push_back("poc-categories.txt");
        summary << "categories: determiners grouped " << (cats.determiners_grouped ? "yes" : "no")
                << ", pronouns grouped " << (cats.pronouns_grouped ? "yes" : "no") << "\n";
      }
      std::ostringstream jsonl;
      write_jsonl(jsonl, reports);
      write_text(dir / "poc-reports.jsonl", jsonl.str());
      write_text(dir / "poc-summary.txt", summary.str());
      ctx.manifest("poc", {{"seed", pc.seed}, {"corpus", result.corpus_seed}, {"evaluation", result.evaluation_seed}},
                   artifacts);
      std::cout << summary.str();
    }
    return kOk;
  } catch (const ConfigError& e) {
    log(0, std::string("config error: ") + e.what());
    return kConfig;
  } catch (const OracleUnavailable& e) {
    log(0, std::string("oracle unavailable: ") + e.what());
    return kOracle;
  } catch (const Error& e) {
    log(0, std::string("data error: ") + e.what());
    return kData;
  } catch (const std::exception& e) {
    log(0, std::string("error: ") + e.what());
    return kData;
  }
}
