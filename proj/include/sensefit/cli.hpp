#pragma once

// Command-line front end: flat key=value configuration with flag overrides,
// validation, atomic artifact writes and replayable run manifests.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sensefit/common.hpp"
#include "sensefit/embedding_store.hpp"
#include "sensefit/eval.hpp"
#include "sensefit/lexicon.hpp"
#include "sensefit/log.hpp"
#include "sensefit/reldisamb.hpp"
#include "sensefit/sense_fitting.hpp"
#include "sensefit/wsd.hpp"
#include "sensefit/version.hpp"

namespace sensefit::cli {

using json = nlohmann::ordered_json;
using ConfigMap = std::map<std::string, std::string>;

enum class Command { fit, disambiguate_relations, wsd, eval_sim, gen_simsense, iaa };

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

inline std::string_view command_name(Command c) {
  switch (c) {
    case Command::fit: return "fit";
    case Command::disambiguate_relations: return "disambiguate-relations";
    case Command::wsd: return "wsd";
    case Command::eval_sim: return "eval-sim";
    case Command::gen_simsense: return "gen-simsense";
    case Command::iaa: return "iaa";
  }
  return "?";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (auto c : {Command::fit, Command::disambiguate_relations, Command::wsd, Command::eval_sim,
                 Command::gen_simsense, Command::iaa}) {
    if (command_name(c) == s) return c;
  }
  return std::nullopt;
}

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyKind { value, input_path, output_path };

struct KeySpec {
  std::string name;
  std::string default_value;  // empty = unset
  KeyKind kind = KeyKind::value;
  bool required = false;
  std::string help;
};

inline std::vector<KeySpec> common_keys() {
  return {
      {"threads", "1", KeyKind::value, false, "worker thread cap"},
      {"log-level", "info", KeyKind::value, false, "debug|info|warn|error|off"},
      {"seed", std::to_string(kDefaultSeed), KeyKind::value, false, "seed for every randomized stage"},
  };
}

inline std::vector<KeySpec> optimizer_keys() {
  return {
      {"attract-margin", "0.6", KeyKind::value, false, "attract hinge margin"},
      {"repel-margin", "0", KeyKind::value, false, "repel hinge margin"},
      {"reg-lambda", "1e-09", KeyKind::value, false, "pull towards the initial vectors"},
      {"batch-size", "50", KeyKind::value, false, "constraint pairs per batch"},
      {"learning-rate", "0.05", KeyKind::value, false, "Adagrad base learning rate"},
      {"polarity", "synonym=attract,hyponym=attract,hypernym=attract,antonym=repel", KeyKind::value, false,
       "relation type to polarity map"},
      {"case", "as-is", KeyKind::value, false, "word key case handling: as-is|lower"},
  };
}

inline std::vector<KeySpec> command_keys(Command c) {
  std::vector<KeySpec> keys = common_keys();
  auto add = [&](std::vector<KeySpec> more) { keys.insert(keys.end(), more.begin(), more.end()); };
  switch (c) {
    case Command::fit:
      add({{"embeddings", "", KeyKind::input_path, true, "word2vec text embeddings"},
           {"inventory", "", KeyKind::input_path, true, "sense inventory (TSV)"},
           {"out", "", KeyKind::output_path, true, "sense embeddings output"},
           {"loss-csv", "", KeyKind::output_path, false, "loss trace CSV (default: <out>.loss.csv)"},
           {"delta", "0.05", KeyKind::value, false, "gloss-token cosine threshold"},
           {"epochs", "5", KeyKind::value, false, "optimizer epochs"},
           {"expand-ambiguous", "true", KeyKind::value, false, "train on sense-to-lemma relations"}});
      add(optimizer_keys());
      break;
    case Command::disambiguate_relations:
      add({{"embeddings", "", KeyKind::input_path, true, "word2vec text embeddings"},
           {"inventory", "", KeyKind::input_path, true, "sense inventory (TSV)"},
           {"out", "", KeyKind::output_path, true, "resolved relations output"},
           {"out-inventory", "", KeyKind::output_path, false, "inventory with resolved relations"},
           {"epochs", "10", KeyKind::value, false, "maximum resolution iterations"},
           {"optimizer-epochs", "1", KeyKind::value, false, "optimizer epochs per iteration"},
           {"plan", "two-batch", KeyKind::value, false, "two-batch|single-batch"},
           {"gold", "", KeyKind::input_path, false, "gold resolutions to score against"},
           {"report", "", KeyKind::output_path, false, "JSON evaluation report (needs --gold)"}});
      add(optimizer_keys());
      break;
    case Command::wsd:
      add({{"corpus", "", KeyKind::input_path, true, "WSD corpus (TSV)"},
           {"inventory", "", KeyKind::input_path, true, "sense inventory (TSV)"},
           {"word-emb", "", KeyKind::input_path, true, "word embeddings"},
           {"sense-emb", "", KeyKind::input_path, false, "sense embeddings"},
           {"components", "", KeyKind::value, false, "subset of sense,gloss,relation"},
           {"window", "8", KeyKind::value, false, "context tokens per side"},
           {"relation-types", "synonym,hyponym", KeyKind::value, false, "relations feeding the relation vector"},
           {"context-field", "surface", KeyKind::value, false, "surface|lemma"},
           {"case", "as-is", KeyKind::value, false, "word key case handling: as-is|lower"},
           {"prefer-sense-vectors", "true", KeyKind::value, false, "relation vector uses sense vectors first"},
           {"baseline", "none", KeyKind::value, false, "none|first|random"},
           {"report", "", KeyKind::output_path, true, "JSON report"}});
      break;
    case Command::eval_sim:
      add({{"sense-emb", "", KeyKind::input_path, true, "sense embeddings"},
           {"dataset", "", KeyKind::input_path, true, "similarity dataset (TSV)"},
           {"report", "", KeyKind::output_path, false, "JSON report (default: stdout)"}});
      break;
    case Command::gen_simsense:
      add({{"inventory", "", KeyKind::input_path, true, "sense inventory (TSV)"},
           {"pairs", "", KeyKind::input_path, true, "word pairs (TSV)"},
           {"out", "", KeyKind::output_path, true, "pair skeletons output"},
           {"relation-types", "synonym,antonym,hyponym,hypernym", KeyKind::value, false,
            "relations that make senses related"}});
      break;
    case Command::iaa:
      add({{"annotations", "", KeyKind::input_path, true, "annotation matrix (TSV)"},
           {"report", "", KeyKind::output_path, false, "JSON report (default: stdout)"}});
      break;
  }
  return keys;
}

// "key = value" lines; '#' starts a comment line.
inline ConfigMap parse_config_text(std::string_view content) {
  ConfigMap out;
  std::size_t line_no = 0;
  for (auto raw : text::split(content, '\n')) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    auto key = text::trim(line.substr(0, eq));
    auto value = text::trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    out[std::string(key)] = std::string(value);
  }
  return out;
}

// --- typed views over a resolved map ---------------------------------------

namespace detail {

inline const std::string& get(const ConfigMap& m, const std::string& key) {
  static const std::string empty;
  auto it = m.find(key);
  return it == m.end() ? empty : it->second;
}

inline double get_double(const ConfigMap& m, const std::string& key) {
  auto v = text::parse_double(get(m, key));
  if (!v || !std::isfinite(*v)) throw ValidationError("--" + key + ": expected a number, got '" + get(m, key) + "'");
  return *v;
}

template <typename Int>
Int get_int(const ConfigMap& m, const std::string& key) {
  auto v = text::parse_int<Int>(get(m, key));
  if (!v) throw ValidationError("--" + key + ": expected a non-negative integer, got '" + get(m, key) + "'");
  return *v;
}

inline bool get_bool(const ConfigMap& m, const std::string& key) {
  const auto& v = get(m, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("--" + key + ": expected true or false, got '" + v + "'");
}

inline CaseMode get_case(const ConfigMap& m) {
  const auto& v = get(m, "case");
  if (v == "as-is") return CaseMode::as_is;
  if (v == "lower" || v == "lowercased") return CaseMode::lowercased;
  throw ValidationError("--case: expected as-is or lower, got '" + v + "'");
}

inline PolarityMap get_polarity(const ConfigMap& m) {
  PolarityMap out{};
  std::set<RelationType> seen;
  for (auto part : text::split(get(m, "polarity"), ',')) {
    auto eq = part.find('=');
    auto type = parse_relation_type(text::trim(part.substr(0, eq)));
    auto pol = eq == std::string_view::npos ? std::string_view{} : text::trim(part.substr(eq + 1));
    if (!type || (pol != "attract" && pol != "repel")) {
      throw ValidationError("--polarity: cannot parse '" + std::string(part) + "'");
    }
    out[std::size_t(*type)] = pol == "attract" ? Polarity::attract : Polarity::repel;
    seen.insert(*type);
  }
  if (seen.size() != kAllRelationTypes.size()) {
    throw ValidationError("--polarity must assign all of synonym, antonym, hyponym, hypernym");
  }
  return out;
}

inline RelationTypeSet get_relation_types(const ConfigMap& m) {
  RelationTypeSet out;
  for (auto part : text::split(get(m, "relation-types"), ',')) {
    auto t = parse_relation_type(text::trim(part));
    if (!t) throw ValidationError("--relation-types: unknown relation type '" + std::string(part) + "'");
    out.insert(*t);
  }
  return out;
}

inline SenseFitConfig get_sensefit(const ConfigMap& m, bool with_delta_epochs) {
  SenseFitConfig cfg;
  if (with_delta_epochs) {
    cfg.delta = get_double(m, "delta");
    cfg.epochs = get_int<std::size_t>(m, "epochs");
  }
  cfg.attract_margin = get_double(m, "attract-margin");
  cfg.repel_margin = get_double(m, "repel-margin");
  cfg.reg_lambda = get_double(m, "reg-lambda");
  cfg.batch_size = get_int<std::size_t>(m, "batch-size");
  cfg.learning_rate = get_double(m, "learning-rate");
  cfg.rng_seed = get_int<std::uint64_t>(m, "seed");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return cfg;
}

inline json prf_json(const Prf& p) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"total", p.total},       {"answered", p.answered}, {"correct", p.correct},
              {"precision", opt(p.precision)}, {"recall", opt(p.recall)},   {"f1", opt(p.f1)}};
}

inline std::string file_hash(const std::filesystem::path& p) { return hex64(fnv1a(read_file(p))); }

}  // namespace detail

// Defaults overlaid with the user's values, after checking keys, required
// inputs and cross-field constraints.
inline ConfigMap resolve_config(Command c, const ConfigMap& user) {
  auto keys = command_keys(c);
  ConfigMap out;
  for (const auto& k : keys) out[k.name] = k.default_value;
  for (const auto& [key, value] : user) {
    if (key == "config") continue;
    if (!out.contains(key)) {
      throw ValidationError("unknown option '" + key + "' for command " + std::string(command_name(c)));
    }
    out[key] = value;
  }
  for (const auto& k : keys) {
    const auto& v = out[k.name];
    if (k.required && v.empty()) throw ValidationError("missing required option --" + k.name);
    if (k.kind == KeyKind::input_path && !v.empty() && !std::filesystem::is_regular_file(v)) {
      throw ValidationError("--" + k.name + ": cannot read input file '" + v + "'");
    }
  }

  if (c == Command::fit && out["loss-csv"].empty()) out["loss-csv"] = out["out"] + ".loss.csv";
  if (c == Command::wsd && out["components"].empty()) {
    out["components"] = out["sense-emb"].empty() ? "gloss,relation" : "sense,gloss,relation";
  }

  // Type checks happen here so that every validation failure exits with 1.
  detail::get_int<std::size_t>(out, "threads");
  detail::get_int<std::uint64_t>(out, "seed");
  log::Level lv;
  if (!log::parse_level(out["log-level"], lv)) throw ValidationError("--log-level: unknown level '" + out["log-level"] + "'");
  switch (c) {
    case Command::fit:
      detail::get_case(out);
      detail::get_polarity(out);
      detail::get_bool(out, "expand-ambiguous");
      detail::get_sensefit(out, true);
      break;
    case Command::disambiguate_relations: {
      detail::get_case(out);
      detail::get_polarity(out);
      detail::get_sensefit(out, false);
      if (detail::get_int<std::size_t>(out, "epochs") < 1) throw ValidationError("--epochs must be >= 1");
      detail::get_int<std::size_t>(out, "optimizer-epochs");
      if (!parse_batch_plan(out["plan"])) throw ValidationError("--plan: expected two-batch or single-batch");
      if (!out["report"].empty() && out["gold"].empty()) throw ValidationError("--report requires --gold");
      break;
    }
    case Command::wsd: {
      detail::get_case(out);
      auto comps = parse_components(out["components"]);
      if (!comps) throw ValidationError("--components: expected a non-empty subset of sense,gloss,relation");
      if (comps->sense && out["sense-emb"].empty()) {
        throw ValidationError("--components includes 'sense' but no --sense-emb was given");
      }
      if (detail::get_int<std::size_t>(out, "window") < 1) throw ValidationError("--window must be >= 1");
      detail::get_relation_types(out);
      detail::get_bool(out, "prefer-sense-vectors");
      if (out["context-field"] != "surface" && out["context-field"] != "lemma") {
        throw ValidationError("--context-field: expected surface or lemma");
      }
      if (out["baseline"] != "none" && out["baseline"] != "first" && out["baseline"] != "random") {
        throw ValidationError("--baseline: expected none, first or random");
      }
      break;
    }
    case Command::gen_simsense:
      detail::get_relation_types(out);
      break;
    case Command::eval_sim:
    case Command::iaa:
      break;
  }
  return out;
}

// --- command bodies --------------------------------------------------------

// Artifacts are staged in memory and committed once the command succeeded.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;  // (config key, content)
  std::optional<std::string> stdout_text;
};

namespace detail {

inline Artifacts run_fit(const ConfigMap& m) {
  auto cfg = get_sensefit(m, true);
  auto words = load_embeddings(get(m, "embeddings"), LoadOptions{get_case(m)});
  auto inv = load_inventory(get(m, "inventory"));
  ExtractOptions extract{get_bool(m, "expand-ambiguous")};
  auto result = sense_fit(words, inv, get_polarity(m), cfg, extract);
  Artifacts a;
  a.files.emplace_back("out", format_embeddings(result.store.current));
  a.files.emplace_back("loss-csv", format_loss_trace(result.trace));
  return a;
}

inline Artifacts run_disambiguate(const ConfigMap& m) {
  auto cfg = get_sensefit(m, false);
  auto words = load_embeddings(get(m, "embeddings"), LoadOptions{get_case(m)});
  auto inv = load_inventory(get(m, "inventory"));
  DisambiguationRun run;
  run.epochs = get_int<std::size_t>(m, "epochs");
  run.optimizer_epochs = get_int<std::size_t>(m, "optimizer-epochs");
  run.plan = *parse_batch_plan(get(m, "plan"));
  auto [relations, done] = disambiguate_relations(words, inv, cfg, run, get_polarity(m));
  Artifacts a;
  a.files.emplace_back("out", format_resolutions(inv, done));
  if (!get(m, "out-inventory").empty()) a.files.emplace_back("out-inventory", format_inventory(apply_resolutions(inv, done)));
  if (!get(m, "gold").empty()) {
    auto gold = load_resolutions(get(m, "gold"));
    auto scores = evaluate_disambiguation(to_resolution_map(done), gold);
    json by_type = json::object();
    for (auto t : kAllRelationTypes) by_type[std::string(relation_name(t))] = prf_json(scores[t]);
    json report{{"command", "disambiguate-relations"},
                {"overall", prf_json(scores.overall)},
                {"by_type", by_type},
                {"iterations", done.trace.size()},
                {"changes_per_iteration", done.trace}};
    auto text_report = report.dump(2) + "\n";
    if (!get(m, "report").empty()) {
      a.files.emplace_back("report", text_report);
    } else {
      a.stdout_text = text_report;
    }
  }
  log::info("resolved ", relations.size(), " sense-to-lemma relation(s) in ", done.trace.size(), " iteration(s)");
  return a;
}

inline Artifacts run_wsd(const ConfigMap& m, std::size_t threads) {
  WSDConfig cfg;
  cfg.window = get_int<std::size_t>(m, "window");
  cfg.use_components = *parse_components(get(m, "components"));
  cfg.relation_types = get_relation_types(m);
  cfg.prefer_sense_vectors = get_bool(m, "prefer-sense-vectors");
  cfg.context_field = get(m, "context-field") == "lemma" ? ContextField::lemma : ContextField::surface;
  cfg.rng_seed = get_int<std::uint64_t>(m, "seed");

  auto corpus = load_corpus(get(m, "corpus"));
  auto inv = load_inventory(get(m, "inventory"));
  auto words = load_embeddings(get(m, "word-emb"), LoadOptions{get_case(m)});
  std::optional<EmbeddingStore> senses;
  if (!get(m, "sense-emb").empty()) senses = load_embeddings(get(m, "sense-emb"));
  WSDResources res{&inv, &words, senses ? &*senses : nullptr};

  std::vector<std::optional<SenseID>> predictions;
  const auto& baseline = get(m, "baseline");
  if (baseline == "first") {
    for (const auto& inst : corpus) predictions.push_back(baseline_first_sense(inst, inv));
  } else if (baseline == "random") {
    predictions = baseline_random_all(corpus, inv, cfg.rng_seed);
  } else {
    predictions = disambiguate_all(corpus, res, cfg, threads);
  }
  auto scores = score_corpus(corpus, predictions);

  json by_pos = json::object();
  for (auto p : {Pos::noun, Pos::verb, Pos::adjective, Pos::other}) by_pos[std::string(pos_name(p))] = prf_json(scores[p]);
  json preds = json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& inst = corpus[i];
    json row{{"instance", i},
             {"target", inst.target_lemma + "#" + std::string(pos_name(inst.pos))},
             {"prediction", predictions[i] ? json(predictions[i]->key()) : json(nullptr)},
             {"gold", inst.gold ? json(inst.gold->key()) : json(nullptr)}};
    preds.push_back(std::move(row));
  }
  json report{{"command", "wsd"},
              {"method", baseline == "none" ? "three-vector" : baseline + "-sense-baseline"},
              {"components", cfg.use_components.to_string()},
              {"overall", prf_json(scores.overall)},
              {"by_pos", by_pos},
              {"unscored", scores.unscored},
              {"predictions", preds}};
  Artifacts a;
  a.files.emplace_back("report", report.dump(2) + "\n");
  return a;
}

inline Artifacts run_eval_sim(const ConfigMap& m) {
  auto senses = load_embeddings(get(m, "sense-emb"));
  auto dataset = load_similarity_dataset(get(m, "dataset"));
  auto r = evaluate_similarity(senses, dataset);
  json report{{"command", "eval-sim"},
              {"rho", r.rho ? json(*r.rho) : json(nullptr)},
              {"scored", r.scored},
              {"dropped", r.dropped},
              {"dataset_size", dataset.size()}};
  Artifacts a;
  if (get(m, "report").empty()) {
    a.stdout_text = report.dump(2) + "\n";
  } else {
    a.files.emplace_back("report", report.dump(2) + "\n");
  }
  return a;
}

inline Artifacts run_gen_simsense(const ConfigMap& m) {
  auto inv = load_inventory(get(m, "inventory"));
  auto pairs = load_word_pairs(get(m, "pairs"));
  GenerationReport rep;
  auto skeletons = generate_simsense_pairs(pairs, inv, get_relation_types(m), &rep);
  log::info("simsense: ", rep.positive, " positive, ", rep.negative, " negative, ", rep.false_pairs, " false, ",
            rep.skipped.size(), " skipped");
  Artifacts a;
  a.files.emplace_back("out", format_skeletons(skeletons));
  return a;
}

inline Artifacts run_iaa(const ConfigMap& m) {
  auto matrix = load_annotations(get(m, "annotations"));
  Agreement agr;
  try {
    agr = inter_annotator_agreement(matrix);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("annotation matrix: ") + e.what());
  }
  json report{{"command", "iaa"},
              {"rho_bar", agr.rho_bar ? json(*agr.rho_bar) : json(nullptr)},
              {"sigma_bar", agr.sigma_bar ? json(*agr.sigma_bar) : json(nullptr)},
              {"annotators", matrix.annotators.size()},
              {"pairs", matrix.pairs.size()},
              {"excluded_annotator_pairs", agr.excluded_annotator_pairs}};
  Artifacts a;
  if (get(m, "report").empty()) {
    a.stdout_text = report.dump(2) + "\n";
  } else {
    a.files.emplace_back("report", report.dump(2) + "\n");
  }
  return a;
}

}  // namespace detail

inline std::string config_hash(const ConfigMap& m) {
  std::string canon;
  for (const auto& [k, v] : m) canon += k + "=" + v + "\n";
  return hex64(fnv1a(canon));
}

inline std::filesystem::path manifest_path_for(const std::filesystem::path& primary) {
  auto p = primary;
  p += ".manifest.json";
  return p;
}

// Manifest: everything needed to replay the run and check its outputs.
// Contains no timestamps, so it is itself reproducible.
inline json build_manifest(Command c, const ConfigMap& m, const Artifacts& a) {
  json inputs = json::object();
  for (const auto& k : command_keys(c)) {
    if (k.kind != KeyKind::input_path) continue;
    const auto& path = detail::get(m, k.name);
    if (path.empty()) continue;
    inputs[k.name] = json{{"path", path}, {"fnv1a64", detail::file_hash(path)}};
  }
  json outputs = json::object();
  for (const auto& [key, content] : a.files) {
    outputs[key] = json{{"path", detail::get(m, key)}, {"fnv1a64", hex64(fnv1a(content))}};
  }
  json config = json::object();
  for (const auto& [k, v] : m) config[k] = v;
  return json{{"tool", "sensefit"},
              {"version", kVersion},
              {"compiler", kCompiler},
              {"command", command_name(c)},
              {"seed", detail::get(m, "seed")},
              {"config_hash", config_hash(m)},
              {"config", config},
              {"inputs", inputs},
              {"outputs", outputs}};
}

struct RunOutcome {
  int exit_code = kExitOk;
  std::optional<json> manifest;
  std::optional<std::filesystem::path> manifest_path;
};

// Executes a command on an already merged (config file + flags) map.
inline RunOutcome run(Command c, const ConfigMap& user) {
  RunOutcome outcome;
  ConfigMap m;
  try {
    m = resolve_config(c, user);
  } catch (const ValidationError& e) {
    log::error("validation: ", e.what());
    outcome.exit_code = kExitValidation;
    return outcome;
  }
  log::Level lv = log::Level::info;
  log::parse_level(m["log-level"], lv);
  log::set_level(lv);
  const auto threads = std::max<std::size_t>(1, detail::get_int<std::size_t>(m, "threads"));

  try {
    Artifacts a;
    switch (c) {
      case Command::fit: a = detail::run_fit(m); break;
      case Command::disambiguate_relations: a = detail::run_disambiguate(m); break;
      case Command::wsd: a = detail::run_wsd(m, threads); break;
      case Command::eval_sim: a = detail::run_eval_sim(m); break;
      case Command::gen_simsense: a = detail::run_gen_simsense(m); break;
      case Command::iaa: a = detail::run_iaa(m); break;
    }
    for (const auto& [key, content] : a.files) write_file_atomic(m[key], content);
    if (a.stdout_text) std::cout << *a.stdout_text << std::flush;
    if (!a.files.empty()) {
      auto manifest = build_manifest(c, m, a);
      auto path = manifest_path_for(m[a.files.front().first]);
      write_file_atomic(path, manifest.dump(2) + "\n");
      outcome.manifest = std::move(manifest);
      outcome.manifest_path = path;
    }
  } catch (const std::exception& e) {
    log::error(command_name(c), ": ", e.what());
    outcome.exit_code = kExitRuntime;
  }
  return outcome;
}

// Re-runs the command recorded in a manifest. Inputs must still hash to the
// recorded values; outputs must come out bit-identical.
inline int replay(const std::filesystem::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const std::exception& e) {
    log::error("replay: cannot read manifest ", manifest_path.string(), ": ", e.what());
    return kExitValidation;
  }
  auto cmd = parse_command(manifest.value("command", ""));
  if (!cmd || !manifest.contains("config")) {
    log::error("replay: manifest lacks a valid command or config");
    return kExitValidation;
  }
  ConfigMap m;
  for (auto& [k, v] : manifest["config"].items()) m[k] = v.get<std::string>();
  for (auto& [k, v] : manifest["inputs"].items()) {
    auto path = v["path"].get<std::string>();
    std::string now;
    try {
      now = detail::file_hash(path);
    } catch (const std::exception&) {
      log::error("replay: input ", k, " (", path, ") is missing");
      return kExitValidation;
    }
    if (now != v["fnv1a64"].get<std::string>()) {
      log::error("replay: input ", k, " (", path, ") changed since the recorded run");
      return kExitValidation;
    }
  }
  auto outcome = run(*cmd, m);
  if (outcome.exit_code != kExitOk) return outcome.exit_code;
  for (auto& [k, v] : manifest["outputs"].items()) {
    auto path = v["path"].get<std::string>();
    if (detail::file_hash(path) != v["fnv1a64"].get<std::string>()) {
      log::error("replay: output ", k, " (", path, ") differs from the recorded run");
      return kExitRuntime;
    }
  }
  log::info("replay: all outputs bit-identical");
  return kExitOk;
}

// Parses argv with CLI11 and dispatches. Flags override --config values.
inline int main_entry(int argc, char** argv) {
  CLI::App app{"sensefit: sense embeddings, relation disambiguation and WSD"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  struct Sub {
    Command command;
    CLI::App* app;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string config_path;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  for (auto c : {Command::fit, Command::disambiguate_relations, Command::wsd, Command::eval_sim,
                 Command::gen_simsense, Command::iaa}) {
    auto s = std::make_unique<Sub>();
    s->command = c;
    s->app = app.add_subcommand(std::string(command_name(c)));
    s->app->add_option("--config", s->config_path, "flat key = value configuration file");
    for (const auto& k : command_keys(c)) {
      std::string help = k.help;
      if (!k.default_value.empty()) help += " [" + k.default_value + "]";
      if (k.required) help += " (required)";
      s->options[k.name] = s->app->add_option("--" + k.name, s->values[k.name], help);
    }
    subs.push_back(std::move(s));
  }
  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a command from its manifest and verify outputs");
  replay_cmd->add_option("--manifest", manifest_path, "manifest written by an earlier run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (replay_cmd->parsed()) return replay(manifest_path);
  for (auto& s : subs) {
    if (!s->app->parsed()) continue;
    ConfigMap merged;
    if (!s->config_path.empty()) {
      try {
        merged = parse_config_text(read_file(s->config_path));
      } catch (const std::exception& e) {
        log::error("validation: config file: ", e.what());
        return kExitValidation;
      }
    }
    for (const auto& [name, opt] : s->options) {
      if (opt->count() > 0) merged[name] = s->values[name];
    }
    return run(s->command, merged).exit_code;
  }
  return kExitValidation;
}

}  // namespace sensefit::cli
