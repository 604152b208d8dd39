// Command-line front end wiring backends, constraints, prompting, decoding,
// checking, repair, reasoning, and embedding together.
//
// Exit codes: 0 ok, 2 config error, 3 backend error, 4 infeasible constraint,
// 5 eval failure threshold.

#include <cctype>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "consist/checker.hpp"
#include "consist/constraints.hpp"
#include "consist/decode.hpp"
#include "consist/eval.hpp"
#include "consist/geometry.hpp"
#include "consist/http_lm.hpp"
#include "consist/lm.hpp"
#include "consist/ontology.hpp"
#include "consist/prompt.hpp"
#include "consist/repair.hpp"
#include "consist/text.hpp"
#include "json.hpp"

namespace {

using consist::CnfConstraint;
using consist::DecodeConfig;
using consist::InflectionLexicon;
using consist::LmBackend;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitEvalThreshold = 5;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // backend
  std::string backend_kind = "ngram";
  std::string corpus;
  int order = 2;
  double lambda = 1.0;
  std::string url = "http://127.0.0.1:8080";
  int timeout_ms = 5000;
  // decode
  DecodeConfig decode;
  // prompt
  std::string style = "cnf";  // abs | cnf
  std::string shots_path;
  int n_shots = 0;
  // checker
  double checker_lambda = 1.0;
  // paths
  std::string dataset, lexicon, ontology, gazetteer, output;
};

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError("unknown config key: " + section + "." + it.key());
  }
}

template <typename T>
T fetch(const json& j, const std::string& section, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for config key: " + section + "." + key);
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "", {"backend", "decode", "prompt", "checker", "paths"});
  if (j.contains("backend")) {
    const auto& b = j["backend"];
    check_keys(b, "backend", {"kind", "corpus", "order", "lambda", "url", "timeout_ms"});
    cfg.backend_kind = fetch<std::string>(b, "backend", "kind", cfg.backend_kind);
    cfg.corpus = fetch<std::string>(b, "backend", "corpus", cfg.corpus);
    cfg.order = fetch<int>(b, "backend", "order", cfg.order);
    cfg.lambda = fetch<double>(b, "backend", "lambda", cfg.lambda);
    cfg.url = fetch<std::string>(b, "backend", "url", cfg.url);
    cfg.timeout_ms = fetch<int>(b, "backend", "timeout_ms", cfg.timeout_ms);
    if (cfg.backend_kind != "ngram" && cfg.backend_kind != "http")
      throw ConfigError("backend.kind must be 'ngram' or 'http'");
  }
  if (j.contains("decode")) {
    const auto& d = j["decode"];
    check_keys(d, "decode",
               {"max_new_tokens", "beam_size", "alpha", "n_particles", "ess_threshold", "seed",
                "temperature"});
    cfg.decode.max_new_tokens = fetch<int>(d, "decode", "max_new_tokens", cfg.decode.max_new_tokens);
    cfg.decode.beam_size = fetch<int>(d, "decode", "beam_size", cfg.decode.beam_size);
    cfg.decode.alpha = fetch<double>(d, "decode", "alpha", cfg.decode.alpha);
    cfg.decode.n_particles = fetch<int>(d, "decode", "n_particles", cfg.decode.n_particles);
    cfg.decode.ess_threshold = fetch<double>(d, "decode", "ess_threshold", cfg.decode.ess_threshold);
    cfg.decode.seed = fetch<std::uint64_t>(d, "decode", "seed", cfg.decode.seed);
    cfg.decode.temperature = fetch<double>(d, "decode", "temperature", cfg.decode.temperature);
  }
  if (j.contains("prompt")) {
    const auto& p = j["prompt"];
    check_keys(p, "prompt", {"style", "shots", "n_shots"});
    cfg.style = fetch<std::string>(p, "prompt", "style", cfg.style);
    cfg.shots_path = fetch<std::string>(p, "prompt", "shots", cfg.shots_path);
    cfg.n_shots = fetch<int>(p, "prompt", "n_shots", cfg.n_shots);
    if (cfg.style != "abs" && cfg.style != "cnf")
      throw ConfigError("prompt.style must be 'abs' or 'cnf'");
    if (cfg.n_shots < 0 || cfg.n_shots > 2) throw ConfigError("prompt.n_shots must be 0, 1, or 2");
  }
  if (j.contains("checker")) {
    const auto& c = j["checker"];
    check_keys(c, "checker", {"lambda"});
    cfg.checker_lambda = fetch<double>(c, "checker", "lambda", cfg.checker_lambda);
  }
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    check_keys(p, "paths", {"dataset", "lexicon", "ontology", "gazetteer", "output"});
    cfg.dataset = fetch<std::string>(p, "paths", "dataset", cfg.dataset);
    cfg.lexicon = fetch<std::string>(p, "paths", "lexicon", cfg.lexicon);
    cfg.ontology = fetch<std::string>(p, "paths", "ontology", cfg.ontology);
    cfg.gazetteer = fetch<std::string>(p, "paths", "gazetteer", cfg.gazetteer);
    cfg.output = fetch<std::string>(p, "paths", "output", cfg.output);
  }
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["backend"] = {{"kind", cfg.backend_kind}, {"corpus", cfg.corpus},   {"order", cfg.order},
                  {"lambda", cfg.lambda},     {"url", cfg.url},         {"timeout_ms", cfg.timeout_ms}};
  j["decode"] = {{"max_new_tokens", cfg.decode.max_new_tokens},
                 {"beam_size", cfg.decode.beam_size},
                 {"alpha", cfg.decode.alpha},
                 {"n_particles", cfg.decode.n_particles},
                 {"ess_threshold", cfg.decode.ess_threshold},
                 {"seed", cfg.decode.seed},
                 {"temperature", cfg.decode.temperature}};
  j["prompt"] = {{"style", cfg.style}, {"shots", cfg.shots_path}, {"n_shots", cfg.n_shots}};
  j["checker"] = {{"lambda", cfg.checker_lambda}};
  j["paths"] = {{"dataset", cfg.dataset},
                {"lexicon", cfg.lexicon},
                {"ontology", cfg.ontology},
                {"gazetteer", cfg.gazetteer},
                {"output", cfg.output}};
  return j;
}

std::unique_ptr<LmBackend> make_backend(const RunConfig& cfg) {
  if (cfg.backend_kind == "ngram") {
    if (cfg.corpus.empty()) throw ConfigError("backend.corpus is required for the ngram backend");
    return std::make_unique<consist::NgramLm>(
        consist::NgramLm::build_from_file(cfg.corpus, cfg.order, cfg.lambda));
  }
  return std::make_unique<consist::HttpLm>(cfg.url, cfg.timeout_ms);
}

InflectionLexicon load_lexicon(const RunConfig& cfg) {
  if (cfg.lexicon.empty()) throw ConfigError("paths.lexicon is required");
  return InflectionLexicon::load(cfg.lexicon);
}

std::vector<consist::ShotExample> load_config_shots(const RunConfig& cfg,
                                                    const InflectionLexicon& lex) {
  if (cfg.n_shots == 0) return {};
  if (cfg.shots_path.empty()) throw ConfigError("prompt.shots is required when n_shots > 0");
  auto shots = consist::load_shots(cfg.shots_path, lex);
  if (static_cast<int>(shots.size()) < cfg.n_shots)
    throw ConfigError("prompt.n_shots exceeds available shots in " + cfg.shots_path);
  shots.resize(static_cast<std::size_t>(cfg.n_shots));
  return shots;
}

std::vector<std::string> split_keywords(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct GenOutcome {
  std::string text;
  double coverage = 0.0;
  bool satisfied = false;
  double logprob = 0.0;
  bool finished = true;
};

GenOutcome decode_one(const LmBackend& lm, const std::string& strategy,
                      const std::string& prompt_text, const CnfConstraint& c,
                      const DecodeConfig& dcfg) {
  const auto prompt_ids = lm.tokenize(prompt_text, consist::TokenizeMode::lenient);
  consist::Hypothesis hyp;
  if (strategy == "greedy") {
    hyp = consist::greedy(lm, prompt_ids, dcfg);
  } else if (strategy == "beam") {
    hyp = consist::beam(lm, prompt_ids, dcfg).front();
  } else if (strategy == "nl") {
    hyp = consist::constrained_beam(lm, prompt_ids, c, dcfg);
  } else if (strategy == "smc") {
    hyp = consist::smc(lm, prompt_ids, c, dcfg).best;
  } else {
    throw ConfigError("unknown strategy: " + strategy + " (use greedy|beam|nl|smc)");
  }
  GenOutcome out;
  out.text = consist::generated_text(lm, hyp, prompt_ids.size());
  const auto state = consist::evaluate_text(out.text, c);
  out.coverage = consist::coverage(state);
  out.satisfied = consist::is_satisfied(state);
  out.logprob = hyp.logprob;
  out.finished = hyp.finished;
  return out;
}

std::string build_prompt(const RunConfig& cfg, const std::vector<std::string>& keywords,
                         const CnfConstraint& c, std::span<const consist::ShotExample> shots) {
  if (cfg.style == "abs") {
    if (keywords.empty())
      throw ConfigError("abs prompting needs --keywords (a constraint spec has no keyword list)");
    return consist::build_abs(keywords, shots);
  }
  return consist::build_cnf(c, shots);
}

void emit(const std::string& payload, const std::string& output_path) {
  if (output_path.empty()) {
    std::cout << payload << "\n";
  } else {
    std::ofstream out(output_path);
    if (!out) throw ConfigError("cannot write output file: " + output_path);
    out << payload << "\n";
  }
}

int cmd_gen(const RunConfig& cfg, const std::string& keywords_csv,
            const std::string& constraint_spec, const std::string& strategy) {
  const auto lex = load_lexicon(cfg);
  std::vector<std::string> keywords = split_keywords(keywords_csv);
  if (keywords.empty() && constraint_spec.empty())
    throw ConfigError("gen needs --keywords or --constraint");
  const CnfConstraint c = constraint_spec.empty()
                              ? CnfConstraint::from_keywords(keywords, lex)
                              : CnfConstraint::parse(constraint_spec);
  const auto shots = load_config_shots(cfg, lex);
  const std::string prompt_text = build_prompt(cfg, keywords, c, shots);

  const auto lm = make_backend(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const GenOutcome out = decode_one(*lm, strategy, prompt_text, c, cfg.decode);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json j;
  j["text"] = out.text;
  j["coverage"] = 100.0 * out.coverage;
  j["satisfied"] = out.satisfied;
  j["finished"] = out.finished;
  j["logprob"] = out.logprob;
  j["strategy"] = strategy;
  j["seed"] = cfg.decode.seed;
  j["seconds"] = seconds;
  emit(j.dump(2), cfg.output);
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& strategy, int workers) {
  if (cfg.dataset.empty()) throw ConfigError("paths.dataset is required for eval");
  const auto lex = load_lexicon(cfg);
  const auto dataset = consist::load_dataset(cfg.dataset);
  const auto shots = load_config_shots(cfg, lex);
  const auto lm = make_backend(cfg);

  consist::RowPipeline pipeline = [&](const consist::DatasetRow& row) {
    const InflectionLexicon& row_lex = row.inflections ? *row.inflections : lex;
    const CnfConstraint c = CnfConstraint::from_keywords(row.concept_set, row_lex);
    const std::string prompt_text = build_prompt(cfg, row.concept_set, c, shots);
    return decode_one(*lm, strategy, prompt_text, c, cfg.decode).text;
  };

  const auto report = consist::run_suite(dataset, pipeline, lex, workers);

  std::string label = cfg.style + " " + std::to_string(cfg.n_shots) + "-shot + " + strategy;
  if (strategy == "nl") label += ", beam=" + std::to_string(cfg.decode.beam_size);
  if (strategy == "smc") label += ", particle=" + std::to_string(cfg.decode.n_particles);
  std::cout << report.to_table(label);
  emit(report.to_json_text(), cfg.output);

  const double failure_rate =
      static_cast<double>(report.failures) / static_cast<double>(dataset.size());
  if (failure_rate > 0.10) {
    std::cerr << "error: " << report.failures << "/" << dataset.size() << " rows failed\n";
    return kExitEvalThreshold;
  }
  return kExitOk;
}

int cmd_check(const RunConfig& cfg, const std::vector<std::string>& texts,
              const std::string& keywords_csv, const std::string& constraint_spec) {
  if (texts.empty()) throw ConfigError("check needs at least one --text");
  const auto lex = load_lexicon(cfg);
  const auto keywords = split_keywords(keywords_csv);
  if (keywords.empty() && constraint_spec.empty())
    throw ConfigError("check needs --keywords or --constraint");
  const CnfConstraint c = constraint_spec.empty()
                              ? CnfConstraint::from_keywords(keywords, lex)
                              : CnfConstraint::parse(constraint_spec);
  const auto lm = make_backend(cfg);

  std::optional<consist::Ontology> onto;
  std::optional<consist::Gazetteer> gaz;
  if (!cfg.ontology.empty()) onto = consist::Ontology::load(cfg.ontology);
  if (!cfg.gazetteer.empty()) gaz = consist::Gazetteer::load(cfg.gazetteer);
  consist::SemanticContext sem;
  if (onto && gaz) {
    sem.ontology = &*onto;
    sem.gazetteer = &*gaz;
  }

  std::vector<std::pair<std::vector<int>, double>> candidates;
  for (const auto& t : texts) {
    auto ids = lm->tokenize(t, consist::TokenizeMode::lenient);
    const auto ws = consist::text::words(lm->detokenize(ids));
    candidates.emplace_back(std::move(ids), consist::sequence_logprob(*lm, ws));
  }
  const auto scored = consist::score_posterior(*lm, candidates, c, sem, cfg.checker_lambda);

  json rows = json::array();
  for (const auto& sc : scored) {
    json row;
    row["text"] = lm->detokenize(sc.ids);
    row["lm_logprob"] = sc.lm_logprob;
    row["violation_degree"] = sc.violation_degree;
    row["lexical_degree"] = sc.lexical_degree;
    row["semantic_probability"] = sc.semantic_probability;
    row["posterior_weight"] = sc.posterior_weight;
    if (sem.ontology) {
      const auto ws = consist::text::words(lm->detokenize(sc.ids));
      const auto [total, viols] = consist::violation_probability(ws, *sem.ontology, *sem.gazetteer);
      json vj = json::array();
      for (const auto& v : viols)
        vj.push_back({{"axiom", v.axiom.str()},
                      {"grounding", v.grounding},
                      {"probability", v.probability}});
      row["violations"] = std::move(vj);
      (void)total;
    }
    rows.push_back(std::move(row));
  }
  json j;
  j["lambda"] = cfg.checker_lambda;
  j["candidates"] = std::move(rows);
  emit(j.dump(2), cfg.output);
  return kExitOk;
}

int cmd_repair(const RunConfig& cfg, const std::string& input_text,
               const std::string& keywords_csv, const std::string& constraint_spec,
               int budget_flag, const std::string& question) {
  if (input_text.empty()) throw ConfigError("repair needs --text");
  const auto lex = load_lexicon(cfg);
  const auto keywords = split_keywords(keywords_csv);
  if (keywords.empty() && constraint_spec.empty())
    throw ConfigError("repair needs --keywords or --constraint");
  const CnfConstraint c = constraint_spec.empty()
                              ? CnfConstraint::from_keywords(keywords, lex)
                              : CnfConstraint::parse(constraint_spec);
  const auto lm = make_backend(cfg);

  const auto words = consist::text::words(input_text);
  const std::size_t budget =
      budget_flag >= 0 ? static_cast<std::size_t>(budget_flag) : c.clauses().size() + words.size();
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = consist::repair_lexical(*lm, words, c, budget);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json j;
  j["text"] = consist::text::join(result.words);
  j["satisfied"] = result.satisfied;
  j["lm_logprob"] = result.lm_logprob;
  json edits = json::array();
  for (const auto& e : result.edits) edits.push_back(e.str());
  j["edits"] = std::move(edits);
  if (!question.empty())
    j["reprompt"] = consist::reprompt_payload(question, consist::text::join(result.words),
                                              input_text);
  j["seconds"] = seconds;
  emit(j.dump(2), cfg.output);
  return kExitOk;
}

int cmd_reason(const RunConfig& cfg) {
  if (cfg.ontology.empty()) throw ConfigError("paths.ontology is required for reason");
  const auto o = consist::Ontology::load(cfg.ontology);
  const auto cl = o.closure();
  const auto [ok, violations] = o.is_consistent();

  json j;
  j["consistent"] = ok;
  json vj = json::array();
  for (const auto& v : violations)
    vj.push_back({{"axiom", v.axiom.str()},
                  {"grounding", v.grounding},
                  {"probability", v.probability}});
  j["violations"] = std::move(vj);
  j["closure"] = json::parse(cl.to_json_text());
  if (ok) j["minimal"] = json::parse(o.minimal_axioms().to_json_text());
  emit(j.dump(2), cfg.output);
  return kExitOk;
}

int cmd_embed(const RunConfig& cfg, const consist::TrainConfig& tcfg) {
  if (cfg.ontology.empty()) throw ConfigError("paths.ontology is required for embed");
  const auto o = consist::Ontology::load(cfg.ontology);
  const auto t0 = std::chrono::steady_clock::now();
  const auto outcome = consist::train(o, tcfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto report = consist::verify(outcome.embedding, o);

  json j;
  j["embedding"] = json::parse(outcome.embedding.to_json_text());
  j["trace"] = outcome.trace;
  json failing = json::array();
  for (const auto& ax : report.failing) failing.push_back(ax.str());
  j["verify"] = {{"fraction", report.fraction},
                 {"satisfied", report.satisfied},
                 {"total", report.total},
                 {"failing", std::move(failing)}};
  j["seconds"] = seconds;
  emit(j.dump(2), cfg.output);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consist: constrained generation and consistency checking"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed_flag;
  int workers = 1;
  bool print_config = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed_flag, "override decode.seed");
  app.add_option("--workers", workers, "eval worker threads");
  app.add_flag("--print-config", print_config, "print the effective config and exit");

  // shared per-command inputs
  std::string keywords_csv, constraint_spec, strategy = "smc";

  auto* gen = app.add_subcommand("gen", "generate one constrained sequence");
  gen->add_option("--keywords", keywords_csv, "comma-separated keywords");
  gen->add_option("--constraint", constraint_spec, "CNF constraint spec, e.g. (dog|dogs)&(run)");
  gen->add_option("--strategy", strategy, "greedy|beam|nl|smc");

  auto* eval_cmd = app.add_subcommand("eval", "run the evaluation harness over a dataset");
  eval_cmd->add_option("--strategy", strategy, "greedy|beam|nl|smc");

  std::vector<std::string> check_texts;
  auto* check = app.add_subcommand("check", "score candidate sequences against constraints");
  check->add_option("--text", check_texts, "candidate text (repeatable)");
  check->add_option("--keywords", keywords_csv, "comma-separated keywords");
  check->add_option("--constraint", constraint_spec, "CNF constraint spec");

  std::string repair_text, repair_question;
  int repair_budget = -1;
  auto* repair = app.add_subcommand("repair", "repair a sequence to satisfy constraints");
  repair->add_option("--text", repair_text, "sequence to repair");
  repair->add_option("--keywords", keywords_csv, "comma-separated keywords");
  repair->add_option("--constraint", constraint_spec, "CNF constraint spec");
  repair->add_option("--budget", repair_budget, "max edits (default: clauses + words)");
  repair->add_option("--question", repair_question, "original question for the reprompt payload");

  auto* reason = app.add_subcommand("reason", "closure / consistency / minimal axioms");

  consist::TrainConfig tcfg;
  auto* embed = app.add_subcommand("embed", "train ball embeddings for an ontology");
  embed->add_option("--dim", tcfg.dim, "embedding dimension");
  embed->add_option("--margin", tcfg.margin, "hinge margin");
  embed->add_option("--lr", tcfg.lr, "learning rate");
  embed->add_option("--epochs", tcfg.epochs, "max epochs");
  embed->add_option("--radius-cap", tcfg.radius_cap, "max ball radius");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_flag) cfg.decode.seed = *seed_flag;  // flag wins over config
    tcfg.seed = cfg.decode.seed;

    if (print_config) {
      std::cout << config_to_json(cfg).dump(2) << "\n";
      return kExitOk;
    }

    if (gen->parsed()) return cmd_gen(cfg, keywords_csv, constraint_spec, strategy);
    if (eval_cmd->parsed()) return cmd_eval(cfg, strategy, workers);
    if (check->parsed()) return cmd_check(cfg, check_texts, keywords_csv, constraint_spec);
    if (repair->parsed())
      return cmd_repair(cfg, repair_text, keywords_csv, constraint_spec, repair_budget,
                        repair_question);
    if (reason->parsed()) return cmd_reason(cfg);
    if (embed->parsed()) return cmd_embed(cfg, tcfg);

    std::cout << app.help();
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const consist::ParseError& e) {
    std::cerr << "constraint parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const consist::InfeasibleError& e) {
    std::cerr << "infeasible constraint: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const consist::LmError& e) {
    std::cerr << "backend error: " << e.what() << (e.retryable() ? " (retryable)" : "") << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
