#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sensefit/embedding_store.hpp"
#include "sensefit/lexicon.hpp"
#include "sensefit/scoring.hpp"

namespace sensefit {

// Which of the three sense vectors take part in scoring.
struct ComponentSet {
  bool sense = true;
  bool gloss = true;
  bool relation = true;

  bool empty() const { return !sense && !gloss && !relation; }
  bool operator==(const ComponentSet&) const = default;

  std::string to_string() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
      if (!on) return;
      if (!out.empty()) out += ',';
      out += name;
    };
    add(sense, "sense");
    add(gloss, "gloss");
    add(relation, "relation");
    return out;
  }
};

inline std::optional<ComponentSet> parse_components(std::string_view s) {
  ComponentSet c{false, false, false};
  for (auto part : text::split(s, ',')) {
    part = text::trim(part);
    if (part == "sense") c.sense = true;
    else if (part == "gloss") c.gloss = true;
    else if (part == "relation") c.relation = true;
    else return std::nullopt;
  }
  if (c.empty()) return std::nullopt;
  return c;
}

enum class ContextField : std::uint8_t { surface, lemma };

struct WSDConfig {
  std::size_t window = 8;  // tokens per side
  ComponentSet use_components;
  RelationTypeSet relation_types{RelationType::synonym, RelationType::hyponym};
  // Related senses use their sense vector when one exists; otherwise the
  // target lemma's word vector.
  bool prefer_sense_vectors = true;
  ContextField context_field = ContextField::surface;
  std::uint64_t rng_seed = 42;

  void validate() const {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (use_components.empty()) throw std::invalid_argument("at least one component must be enabled");
  }
};

struct WSDInstance {
  std::vector<std::string> tokens;
  std::vector<std::string> lemmas;  // aligned with tokens, may be empty
  std::size_t target_index = 0;
  std::string target_lemma;
  Pos pos = Pos::noun;
  std::optional<SenseID> gold;
};

struct ContextVector {
  Vector vector;
  std::size_t contributing_tokens = 0;
};

struct SenseRepresentation {
  SenseID sense;
  std::optional<Vector> s_s;
  std::optional<Vector> s_g;
  std::optional<Vector> s_r;
};

// Read-only lookup tables for scoring. `senses` may be null when no sense
// embeddings are in play.
struct WSDResources {
  const SenseInventory* inventory = nullptr;
  const EmbeddingStore* words = nullptr;
  const EmbeddingStore* senses = nullptr;
};

// Centroid of the embedded tokens within `window` positions either side of
// the target, target excluded. Repeated tokens count once per occurrence.
inline std::optional<ContextVector> context_vector(const WSDInstance& inst, const EmbeddingStore& words,
                                                   const WSDConfig& cfg) {
  const auto& toks = (cfg.context_field == ContextField::lemma && !inst.lemmas.empty()) ? inst.lemmas : inst.tokens;
  if (inst.target_index >= toks.size()) return std::nullopt;
  const std::size_t lo = inst.target_index >= cfg.window ? inst.target_index - cfg.window : 0;
  const std::size_t hi = std::min(toks.size() - 1, inst.target_index + cfg.window);
  std::vector<VectorView> found;
  for (std::size_t i = lo; i <= hi; ++i) {
    if (i == inst.target_index) continue;
    if (auto v = words.lookup(words.key_for(toks[i]))) found.push_back(*v);
  }
  if (found.empty()) return std::nullopt;
  return ContextVector{centroid(std::span<const VectorView>(found)), found.size()};
}

inline std::optional<Vector> gloss_vector(const SenseID& sense, const SenseInventory& inv,
                                          const EmbeddingStore& words) {
  const auto* entry = inv.find(sense);
  if (!entry) return std::nullopt;
  std::vector<VectorView> found;
  for (const auto& tok : entry->gloss_tokens) {
    if (auto v = words.lookup(words.key_for(tok))) found.push_back(*v);
  }
  if (found.empty()) return std::nullopt;
  return centroid(std::span<const VectorView>(found));
}

inline std::optional<Vector> relation_vector(const SenseID& sense, const SenseInventory& inv,
                                             const EmbeddingStore* sense_store, const EmbeddingStore& words,
                                             const WSDConfig& cfg) {
  std::vector<VectorView> found;
  for (const auto& target : related_senses(inv, sense, cfg.relation_types)) {
    std::optional<VectorView> v;
    if (const auto* id = std::get_if<SenseID>(&target)) {
      if (cfg.prefer_sense_vectors && sense_store) v = sense_store->lookup(id->key());
      if (!v) v = words.lookup(words.key_for(id->lemma));
    } else {
      v = words.lookup(words.key_for(std::get<std::string>(target)));
    }
    if (v) found.push_back(*v);
  }
  if (found.empty()) return std::nullopt;
  return centroid(std::span<const VectorView>(found));
}

inline SenseRepresentation build_representation(const SenseID& sense, const WSDResources& res,
                                                 const WSDConfig& cfg) {
  SenseRepresentation rep{sense, std::nullopt, std::nullopt, std::nullopt};
  if (cfg.use_components.sense && res.senses) {
    if (auto v = res.senses->lookup(sense.key())) rep.s_s = Vector(v->begin(), v->end());
  }
  if (cfg.use_components.gloss) rep.s_g = gloss_vector(sense, *res.inventory, *res.words);
  if (cfg.use_components.relation) rep.s_r = relation_vector(sense, *res.inventory, res.senses, *res.words, cfg);
  return rep;
}

inline constexpr double kUnscoreable = -std::numeric_limits<double>::infinity();

// Unweighted mean cosine between the context and each present, enabled
// component; kUnscoreable when none can be compared.
inline double similarity(const ContextVector& c, const SenseRepresentation& rep, const ComponentSet& use) {
  double sum = 0.0;
  std::size_t n = 0;
  auto add = [&](bool enabled, const std::optional<Vector>& v) {
    if (!enabled || !v) return;
    if (auto cos = try_cosine(c.vector, *v)) {
      sum += *cos;
      ++n;
    }
  };
  add(use.sense, rep.s_s);
  add(use.gloss, rep.s_g);
  add(use.relation, rep.s_r);
  return n ? sum / double(n) : kUnscoreable;
}

// Precomputed representations keyed by sense.
class RepresentationCache {
 public:
  RepresentationCache(const WSDResources& res, const WSDConfig& cfg) : res_(res), cfg_(cfg) {}

  const SenseRepresentation& get(const SenseID& id) {
    auto it = cache_.find(id);
    if (it == cache_.end()) it = cache_.emplace(id, build_representation(id, res_, cfg_)).first;
    return it->second;
  }

  // Read-only lookup; falls back to building a temporary.
  SenseRepresentation peek(const SenseID& id) const {
    auto it = cache_.find(id);
    return it != cache_.end() ? it->second : build_representation(id, res_, cfg_);
  }

  void warm(const std::vector<WSDInstance>& corpus) {
    for (const auto& inst : corpus) {
      for (const auto& s : res_.inventory->senses_of(inst.target_lemma, inst.pos)) get(s);
    }
  }

 private:
  WSDResources res_;
  WSDConfig cfg_;
  std::map<SenseID, SenseRepresentation> cache_;
};

struct SenseScore {
  SenseID sense;
  double score = kUnscoreable;
};

// Every candidate sense with its score, in inventory order. Empty when the
// instance has no context vector or the lemma has no senses.
inline std::vector<SenseScore> score_senses(const WSDInstance& inst, const WSDResources& res, const WSDConfig& cfg,
                                            const RepresentationCache* cache = nullptr) {
  std::vector<SenseScore> out;
  auto senses = res.inventory->senses_of(inst.target_lemma, inst.pos);
  if (senses.empty()) return out;
  auto ctx = context_vector(inst, *res.words, cfg);
  if (!ctx) return out;
  for (const auto& s : senses) {
    auto rep = cache ? cache->peek(s) : build_representation(s, res, cfg);
    out.push_back({s, similarity(*ctx, rep, cfg.use_components)});
  }
  return out;
}

// Highest-scoring sense; the earlier sense wins ties. nullopt = abstain.
inline std::optional<SenseID> disambiguate(const WSDInstance& inst, const WSDResources& res, const WSDConfig& cfg,
                                           const RepresentationCache* cache = nullptr) {
  auto scores = score_senses(inst, res, cfg, cache);
  if (scores.empty()) return std::nullopt;
  const SenseScore* best = &scores.front();
  for (const auto& s : scores) {
    if (s.score > best->score) best = &s;
  }
  return best->sense;
}

// Parallel over instances; output order matches input order.
inline std::vector<std::optional<SenseID>> disambiguate_all(const std::vector<WSDInstance>& corpus,
                                                            const WSDResources& res, const WSDConfig& cfg,
                                                            std::size_t threads = 1) {
  cfg.validate();
  RepresentationCache cache(res, cfg);
  cache.warm(corpus);
  std::vector<std::optional<SenseID>> out(corpus.size());
  threads = std::max<std::size_t>(1, std::min(threads, corpus.size()));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = disambiguate(corpus[i], res, cfg, &cache);
  };
  if (threads == 1) {
    work(0, corpus.size());
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (corpus.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    std::size_t b = t * chunk;
    std::size_t e = std::min(corpus.size(), b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  pool.clear();  // joins
  return out;
}

inline std::optional<SenseID> baseline_first_sense(const WSDInstance& inst, const SenseInventory& inv) {
  auto senses = inv.senses_of(inst.target_lemma, inst.pos);
  if (senses.empty()) return std::nullopt;
  return senses.front();
}

// Uniform over the candidate senses; deterministic for a given engine state.
inline std::optional<SenseID> baseline_random_sense(const WSDInstance& inst, const SenseInventory& inv,
                                                    std::mt19937_64& rng) {
  auto senses = inv.senses_of(inst.target_lemma, inst.pos);
  if (senses.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, senses.size() - 1);
  return senses[pick(rng)];
}

inline std::vector<std::optional<SenseID>> baseline_random_all(const std::vector<WSDInstance>& corpus,
                                                               const SenseInventory& inv, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::optional<SenseID>> out;
  out.reserve(corpus.size());
  for (const auto& inst : corpus) out.push_back(baseline_random_sense(inst, inv, rng));
  return out;
}

struct CorpusScores {
  Prf overall;
  std::array<Prf, 4> by_pos{};  // indexed by Pos
  std::size_t unscored = 0;     // instances without a gold sense
  const Prf& operator[](Pos p) const { return by_pos[std::size_t(p)]; }
};

// IMS-style scoring; an abstention counts as unanswered.
inline CorpusScores score_corpus(const std::vector<WSDInstance>& corpus,
                                 const std::vector<std::optional<SenseID>>& predictions) {
  if (corpus.size() != predictions.size()) throw std::invalid_argument("corpus and prediction counts differ");
  CorpusScores s;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].gold) {
      ++s.unscored;
      continue;
    }
    bool answered = predictions[i].has_value();
    bool correct = answered && *predictions[i] == *corpus[i].gold;
    s.overall.add(answered, correct);
    s.by_pos[std::size_t(corpus[i].pos)].add(answered, correct);
  }
  s.overall = finalize(s.overall);
  for (auto& p : s.by_pos) p = finalize(p);
  return s;
}

// --- corpus file -----------------------------------------------------------
//
//   tokens<TAB>lemmas<TAB>target_index<TAB>target_lemma#pos[<TAB>gold lemma#pos#index]

inline std::vector<WSDInstance> parse_corpus(std::istream& in) {
  std::vector<WSDInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    text::strip_cr(line);
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    if (f.size() < 4 || f.size() > 5) throw parse_error(line_no, "malformed corpus record", "expected 4 or 5 fields");
    WSDInstance inst;
    for (auto t : text::split_ws(f[0])) inst.tokens.emplace_back(t);
    for (auto t : text::split_ws(f[1])) inst.lemmas.emplace_back(t);
    if (!inst.lemmas.empty() && inst.lemmas.size() != inst.tokens.size()) {
      throw parse_error(line_no, "lemma field not aligned with tokens");
    }
    auto idx = text::parse_int<std::size_t>(f[2]);
    if (!idx || *idx >= inst.tokens.size()) throw parse_error(line_no, "target index out of range", std::string(f[2]));
    inst.target_index = *idx;
    auto hash = f[3].rfind('#');
    if (hash == std::string_view::npos) throw parse_error(line_no, "malformed target", std::string(f[3]));
    auto pos = parse_pos(f[3].substr(hash + 1));
    if (!pos || !valid_lemma(f[3].substr(0, hash))) throw parse_error(line_no, "malformed target", std::string(f[3]));
    inst.target_lemma = std::string(f[3].substr(0, hash));
    inst.pos = *pos;
    if (f.size() == 5 && !text::trim(f[4]).empty()) {
      auto gold = parse_sense_id(text::trim(f[4]));
      if (!gold) throw parse_error(line_no, "malformed gold sense", std::string(f[4]));
      inst.gold = *gold;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

inline std::string format_corpus(const std::vector<WSDInstance>& corpus) {
  auto join = [](const std::vector<std::string>& xs) {
    std::string out;
    for (const auto& x : xs) {
      if (!out.empty()) out += ' ';
      out += x;
    }
    return out;
  };
  std::string out;
  for (const auto& inst : corpus) {
    out += join(inst.tokens) + "\t" + join(inst.lemmas) + "\t" + std::to_string(inst.target_index) + "\t" +
           inst.target_lemma + "#" + std::string(pos_name(inst.pos));
    if (inst.gold) out += "\t" + inst.gold->key();
    out += "\n";
  }
  return out;
}

inline std::vector<WSDInstance> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return parse_corpus(in);
}

}  // namespace sensefit
