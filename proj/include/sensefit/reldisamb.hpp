#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sensefit/embedding_store.hpp"
#include "sensefit/lexicon.hpp"
#include "sensefit/log.hpp"
#include "sensefit/scoring.hpp"
#include "sensefit/sense_fitting.hpp"

namespace sensefit {

// Bootstrapped resolution of sense-to-lemma relations: specialize a store of
// lemma copies, pick the closest (antonyms: farthest) target sense, repeat.

enum class BatchPlan : std::uint8_t { two_batch, single_batch };

inline std::string_view batch_plan_name(BatchPlan p) { return p == BatchPlan::two_batch ? "two-batch" : "single-batch"; }

inline std::optional<BatchPlan> parse_batch_plan(std::string_view s) {
  if (s == "two-batch") return BatchPlan::two_batch;
  if (s == "single-batch") return BatchPlan::single_batch;
  return std::nullopt;
}

struct Resolution {
  SenseID target;
  std::size_t epoch = 0;  // loop iteration that last set it; 0 = monosemous
};

struct DisambiguationRun {
  std::size_t epochs = 10;
  BatchPlan plan = BatchPlan::two_batch;
  // Optimizer epochs per loop iteration (0 disables specialization).
  std::size_t optimizer_epochs = 1;

  std::map<RelationKey, Resolution> resolved;
  std::vector<std::size_t> trace;  // changed resolutions per iteration
};

struct ExpandReport {
  std::size_t lemmas_embedded = 0;
  std::vector<std::string> skipped_lemmas;
};

// Every sense of an embedded lemma gets a copy of the lemma's (unit) vector.
inline SenseEmbeddingStore expand_lemma_to_senses(const EmbeddingStore& words, const SenseInventory& inv,
                                                  ExpandReport* report = nullptr) {
  ExpandReport local;
  ExpandReport& rep = report ? *report : local;
  rep = ExpandReport{};
  EmbeddingStore table(words.dimension());
  Vector unit(words.dimension());
  for (const auto& [lemma, list] : inv.entries()) {
    auto v = words.lookup(words.key_for(lemma));
    double n = v ? norm(*v) : 0.0;
    if (!v || n == 0.0) {
      rep.skipped_lemmas.push_back(lemma);
      continue;
    }
    for (std::size_t k = 0; k < unit.size(); ++k) unit[k] = (*v)[k] / n;
    for (const auto& e : list) table.add(e.id.key(), unit);
    ++rep.lemmas_embedded;
  }
  if (!rep.skipped_lemmas.empty()) {
    log::warn("lemma expansion skipped ", rep.skipped_lemmas.size(), " unembedded lemma(s)");
  }
  return SenseEmbeddingStore::from_normalized(std::move(table));
}

// ATTRACT: target sense with the highest cosine to `src`; REPEL: lowest.
// Ties go to the earlier sense. A monosemous target resolves to its only
// sense unconditionally. nullopt when nothing is comparable.
inline std::optional<SenseID> select_target_sense(const SenseEmbeddingStore& store, const SenseID& src,
                                                  std::string_view tgt_lemma, Polarity polarity,
                                                  const SenseInventory& inv) {
  auto candidates = inv.senses_of(tgt_lemma);
  if (candidates.size() == 1) return candidates.front();
  auto src_vec = store.lookup(src);
  if (!src_vec) return std::nullopt;
  std::optional<SenseID> best;
  double best_cos = 0.0;
  for (const auto& cand : candidates) {
    auto v = store.lookup(cand);
    if (!v) continue;
    auto c = try_cosine(*src_vec, *v);
    if (!c) continue;
    bool better = polarity == Polarity::attract ? *c > best_cos : *c < best_cos;
    if (!best || better) {
      best = cand;
      best_cos = *c;
    }
  }
  return best;
}

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (a * 2 + b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Constraints for one specialization pass: fixed sense-to-sense relations,
// resolved ambiguous relations as plain pairs, unresolved ones expanded
// uniformly over the target lemma's senses.
inline ConstraintSet resolution_constraints(const SenseInventory& inv, const EmbeddingStore& table,
                                            const PolarityMap& polarity,
                                            const std::map<RelationKey, Resolution>& resolved,
                                            const std::function<bool(RelationType)>& include) {
  ConstraintReport scratch;
  ConstraintCollector collector(table, polarity, scratch);
  for (const auto& r : inv.relations()) {
    if (!include(r.type)) continue;
    if (const auto* t = std::get_if<SenseID>(&r.target)) {
      collector.offer(r.type, r.source, *t, 1.0);
      continue;
    }
    auto it = resolved.find(key_of(r));
    if (it != resolved.end()) {
      collector.offer(r.type, r.source, it->second.target, 1.0);
      continue;
    }
    auto targets = inv.senses_of(std::get<std::string>(r.target));
    const double w = 1.0 / double(targets.size());
    for (const auto& t : targets) collector.offer(r.type, r.source, t, w);
  }
  return collector.take();
}

}  // namespace detail

// Runs the bootstrap loop on a caller-supplied starting store.
inline std::pair<std::vector<Relation>, DisambiguationRun> disambiguate_relations(
    SenseEmbeddingStore store, const SenseInventory& inv, const SenseFitConfig& cfg, DisambiguationRun run,
    const PolarityMap& polarity = default_polarity_map()) {
  if (run.epochs < 1) throw std::invalid_argument("disambiguation needs at least one epoch");
  cfg.validate();
  run.resolved.clear();
  run.trace.clear();

  std::vector<std::size_t> ambiguous;
  for (std::size_t i = 0; i < inv.relations().size(); ++i) {
    const auto& r = inv.relations()[i];
    if (!r.ambiguous()) continue;
    auto targets = inv.senses_of(r.target_lemma());
    if (targets.size() == 1) {
      run.resolved[key_of(r)] = Resolution{targets.front(), 0};
    } else {
      ambiguous.push_back(i);
    }
  }
  log::info("relation disambiguation: ", run.resolved.size(), " monosemous, ", ambiguous.size(), " ambiguous");

  auto pass = [&](const std::function<bool(RelationType)>& include, std::uint64_t seed) {
    auto cs = detail::resolution_constraints(inv, store.current, polarity, run.resolved, include);
    if (cs.empty()) return;
    SenseFitConfig pass_cfg = cfg;
    pass_cfg.epochs = run.optimizer_epochs;
    pass_cfg.rng_seed = seed;
    store = specialize(std::move(store), cs, pass_cfg).store;
  };

  for (std::size_t it = 1; it <= run.epochs; ++it) {
    if (run.optimizer_epochs > 0) {
      if (run.plan == BatchPlan::two_batch) {
        pass([](RelationType t) { return t != RelationType::antonym; }, detail::derive_seed(cfg.rng_seed, it, 0));
        pass([](RelationType t) { return t == RelationType::antonym; }, detail::derive_seed(cfg.rng_seed, it, 1));
      } else {
        pass([](RelationType) { return true; }, detail::derive_seed(cfg.rng_seed, it, 0));
      }
    }

    std::size_t changes = 0;
    for (auto idx : ambiguous) {
      const auto& r = inv.relations()[idx];
      auto choice = select_target_sense(store, r.source, r.target_lemma(), polarity_of(polarity, r.type), inv);
      auto key = key_of(r);
      auto existing = run.resolved.find(key);
      if (!choice) {
        if (existing != run.resolved.end()) {
          run.resolved.erase(existing);
          ++changes;
        }
        continue;
      }
      if (existing == run.resolved.end()) {
        run.resolved.emplace(key, Resolution{*choice, it});
        ++changes;
      } else if (existing->second.target != *choice) {
        existing->second = Resolution{*choice, it};
        ++changes;
      }
    }
    run.trace.push_back(changes);
    log::info("disambiguation iteration ", it, ": ", changes, " resolution(s) changed");
    if (changes == 0) break;
  }

  std::vector<Relation> out;
  for (const auto& r : inv.relations()) {
    if (!r.ambiguous()) continue;
    auto it = run.resolved.find(key_of(r));
    if (it != run.resolved.end()) out.push_back(Relation{r.type, r.source, it->second.target});
  }
  return {std::move(out), std::move(run)};
}

// Starts from lemma-vector copies, as the bootstrap procedure prescribes.
inline std::pair<std::vector<Relation>, DisambiguationRun> disambiguate_relations(
    const EmbeddingStore& words, const SenseInventory& inv, const SenseFitConfig& cfg, DisambiguationRun run,
    const PolarityMap& polarity = default_polarity_map()) {
  return disambiguate_relations(expand_lemma_to_senses(words, inv), inv, cfg, std::move(run), polarity);
}

// Copy of `inv` with every resolved sense-to-lemma relation rewritten as a
// sense-to-sense relation.
inline SenseInventory apply_resolutions(const SenseInventory& inv, const DisambiguationRun& run) {
  SenseInventory out;
  for (const auto& [lemma, list] : inv.entries()) {
    for (const auto& e : list) out.add_sense(e);
  }
  for (const auto& r : inv.relations()) {
    auto it = r.ambiguous() ? run.resolved.find(key_of(r)) : run.resolved.end();
    out.add_relation(it == run.resolved.end() ? r : Relation{r.type, r.source, it->second.target});
  }
  return out;
}

// --- resolution files ------------------------------------------------------
//
//   R<TAB>type<TAB>src<TAB>resolved_tgt<TAB>epoch_resolved
//
// Unresolved relations carry the bare lemma and "NA". Gold files use the
// same layout; the epoch column is optional there.

inline std::string format_resolutions(const SenseInventory& inv, const DisambiguationRun& run) {
  std::string out;
  for (const auto& r : inv.relations()) {
    if (!r.ambiguous()) continue;
    out += "R\t" + std::string(relation_name(r.type)) + "\t" + r.source.key() + "\t";
    auto it = run.resolved.find(key_of(r));
    if (it == run.resolved.end()) {
      out += r.target_lemma() + "\tNA\n";
    } else {
      out += it->second.target.key() + "\t" + std::to_string(it->second.epoch) + "\n";
    }
  }
  return out;
}

using ResolutionMap = std::map<RelationKey, SenseID>;

inline ResolutionMap to_resolution_map(const DisambiguationRun& run) {
  ResolutionMap out;
  for (const auto& [k, v] : run.resolved) out.emplace(k, v.target);
  return out;
}

inline ResolutionMap parse_resolutions(std::istream& in) {
  ResolutionMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    text::strip_cr(line);
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() < 4 || f.size() > 5 || f[0] != "R") throw parse_error(line_no, "malformed resolution record");
    auto type = parse_relation_type(f[1]);
    if (!type) throw parse_error(line_no, "unknown relation type", std::string(f[1]));
    auto src = parse_sense_id(f[2]);
    if (!src) throw parse_error(line_no, "malformed source sense", std::string(f[2]));
    auto tgt = parse_sense_id(f[3]);
    if (!tgt) continue;  // unresolved
    out[RelationKey{*type, *src, tgt->lemma}] = *tgt;
  }
  return out;
}

// Gold layout: one resolved relation per line, no epoch column.
inline std::string format_resolution_map(const ResolutionMap& m) {
  std::string out;
  for (const auto& [k, tgt] : m) {
    out += "R\t" + std::string(relation_name(k.type)) + "\t" + k.source.key() + "\t" + tgt.key() + "\n";
  }
  return out;
}

inline ResolutionMap load_resolutions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_resolutions(in);
}

struct DisambiguationScores {
  std::array<Prf, 4> by_type{};
  Prf overall;
  const Prf& operator[](RelationType t) const { return by_type[std::size_t(t)]; }
};

// Scored over the gold relations only: a prediction for a gold relation
// counts as answered; unresolved gold relations lower recall.
inline DisambiguationScores evaluate_disambiguation(const ResolutionMap& predicted, const ResolutionMap& gold) {
  DisambiguationScores s;
  for (const auto& [key, gold_target] : gold) {
    auto it = predicted.find(key);
    bool answered = it != predicted.end();
    bool correct = answered && it->second == gold_target;
    s.by_type[std::size_t(key.type)].add(answered, correct);
    s.overall.add(answered, correct);
  }
  for (auto& p : s.by_type) p = finalize(p);
  s.overall = finalize(s.overall);
  return s;
}

}  // namespace sensefit
