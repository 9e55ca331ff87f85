#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "sensefit/common.hpp"
#include "sensefit/embedding_store.hpp"
#include "sensefit/log.hpp"

namespace sensefit {

enum class Pos : std::uint8_t { noun, verb, adjective, other };

inline constexpr std::array<Pos, 4> kAllPos = {Pos::noun, Pos::verb, Pos::adjective, Pos::other};

inline std::string_view pos_name(Pos p) {
  switch (p) {
    case Pos::noun: return "noun";
    case Pos::verb: return "verb";
    case Pos::adjective: return "adjective";
    case Pos::other: return "other";
  }
  return "other";
}

// Accepts the canonical names plus the usual one-letter tags.
inline std::optional<Pos> parse_pos(std::string_view s) {
  if (s == "noun" || s == "n") return Pos::noun;
  if (s == "verb" || s == "v") return Pos::verb;
  if (s == "adjective" || s == "adj" || s == "a") return Pos::adjective;
  if (s == "other" || s == "o" || s == "x") return Pos::other;
  return std::nullopt;
}

struct SenseID {
  std::string lemma;
  Pos pos = Pos::noun;
  std::uint32_t index = 1;

  auto operator<=>(const SenseID&) const = default;
  bool operator==(const SenseID&) const = default;

  // "lemma#pos#index", also the token key in sense embedding files.
  std::string key() const {
    return lemma + "#" + std::string(pos_name(pos)) + "#" + std::to_string(index);
  }
};

inline bool valid_lemma(std::string_view lemma) {
  return !lemma.empty() && lemma.find_first_of("# \t\r\n") == std::string_view::npos;
}

inline std::optional<SenseID> parse_sense_id(std::string_view s) {
  auto second = s.rfind('#');
  if (second == std::string_view::npos || second == 0) return std::nullopt;
  auto first = s.rfind('#', second - 1);
  if (first == std::string_view::npos) return std::nullopt;
  auto lemma = s.substr(0, first);
  auto pos = parse_pos(s.substr(first + 1, second - first - 1));
  auto index = text::parse_int<std::uint32_t>(s.substr(second + 1));
  if (!valid_lemma(lemma) || !pos || !index || *index == 0) return std::nullopt;
  return SenseID{std::string(lemma), *pos, *index};
}

struct SenseIDHash {
  std::size_t operator()(const SenseID& s) const {
    std::size_t h = std::hash<std::string>{}(s.lemma);
    h ^= std::hash<std::uint64_t>{}((std::uint64_t(s.pos) << 32) | s.index) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

enum class RelationType : std::uint8_t { synonym, antonym, hyponym, hypernym };

inline constexpr std::array<RelationType, 4> kAllRelationTypes = {
    RelationType::synonym, RelationType::antonym, RelationType::hyponym, RelationType::hypernym};

inline std::string_view relation_name(RelationType t) {
  switch (t) {
    case RelationType::synonym: return "synonym";
    case RelationType::antonym: return "antonym";
    case RelationType::hyponym: return "hyponym";
    case RelationType::hypernym: return "hypernym";
  }
  return "synonym";
}

inline std::optional<RelationType> parse_relation_type(std::string_view s) {
  for (auto t : kAllRelationTypes) {
    if (relation_name(t) == s) return t;
  }
  return std::nullopt;
}

using RelationTypeSet = std::set<RelationType>;

// A relation target is either a concrete sense or, for ambiguous
// sense-to-lemma relations, a bare lemma.
using RelationTarget = std::variant<SenseID, std::string>;

inline std::string target_key(const RelationTarget& t) {
  if (const auto* s = std::get_if<SenseID>(&t)) return s->key();
  return std::get<std::string>(t);
}

struct Relation {
  RelationType type = RelationType::synonym;
  SenseID source;
  RelationTarget target;

  bool ambiguous() const { return std::holds_alternative<std::string>(target); }
  const std::string& target_lemma() const {
    return ambiguous() ? std::get<std::string>(target) : std::get<SenseID>(target).lemma;
  }

  auto operator<=>(const Relation&) const = default;
  bool operator==(const Relation&) const = default;
};

// Identity of an ambiguous relation independent of how it gets resolved.
struct RelationKey {
  RelationType type = RelationType::synonym;
  SenseID source;
  std::string target_lemma;

  auto operator<=>(const RelationKey&) const = default;
  bool operator==(const RelationKey&) const = default;
};

inline RelationKey key_of(const Relation& r) { return {r.type, r.source, r.target_lemma()}; }

struct SenseEntry {
  SenseID id;
  std::vector<std::string> gloss_tokens;
};

class SenseInventory {
 public:
  // Appends a sense. Indices must run 1, 2, ... per (lemma, pos).
  void add_sense(SenseEntry entry) {
    if (!valid_lemma(entry.id.lemma)) throw DomainError("invalid lemma '" + entry.id.lemma + "'");
    auto& list = entries_[entry.id.lemma];
    std::uint32_t expected = 1;
    for (const auto& e : list) expected += (e.id.pos == entry.id.pos);
    if (entry.id.index != expected) {
      throw DomainError("sense " + entry.id.key() + " out of order; expected index " + std::to_string(expected));
    }
    positions_.emplace(entry.id, std::make_pair(entry.id.lemma, list.size()));
    list.push_back(std::move(entry));
    ++sense_count_;
  }

  // Adds a relation after checking that both ends resolve.
  void add_relation(Relation r) {
    if (!contains(r.source)) throw DomainError("relation source " + r.source.key() + " is not in the inventory");
    if (const auto* t = std::get_if<SenseID>(&r.target)) {
      if (!contains(*t)) throw DomainError("relation target " + t->key() + " is not in the inventory");
    } else if (!has_lemma(std::get<std::string>(r.target))) {
      throw DomainError("relation target lemma '" + std::get<std::string>(r.target) + "' has no senses");
    }
    outgoing_[r.source].push_back(relations_.size());
    relations_.push_back(std::move(r));
  }

  bool contains(const SenseID& id) const { return positions_.contains(id); }
  bool has_lemma(std::string_view lemma) const { return entries_.find(lemma) != entries_.end(); }

  const SenseEntry* find(const SenseID& id) const {
    auto it = positions_.find(id);
    if (it == positions_.end()) return nullptr;
    return &entries_.find(it->second.first)->second[it->second.second];
  }

  // Senses of `lemma` in inventory order, optionally restricted to one pos.
  std::vector<SenseID> senses_of(std::string_view lemma, std::optional<Pos> pos = std::nullopt) const {
    std::vector<SenseID> out;
    auto it = entries_.find(lemma);
    if (it == entries_.end()) return out;
    for (const auto& e : it->second) {
      if (!pos || e.id.pos == *pos) out.push_back(e.id);
    }
    return out;
  }

  // Lemma-sorted, inventory order within a lemma.
  std::vector<SenseID> all_senses() const {
    std::vector<SenseID> out;
    out.reserve(sense_count_);
    for (const auto& [lemma, list] : entries_) {
      for (const auto& e : list) out.push_back(e.id);
    }
    return out;
  }

  std::vector<std::string> lemmas() const {
    std::vector<std::string> out;
    for (const auto& [lemma, list] : entries_) out.push_back(lemma);
    return out;
  }

  const std::map<std::string, std::vector<SenseEntry>, std::less<>>& entries() const { return entries_; }
  const std::vector<Relation>& relations() const { return relations_; }

  // Indices into relations() whose source is `id`, in insertion order.
  const std::vector<std::size_t>& relations_from(const SenseID& id) const {
    static const std::vector<std::size_t> none;
    auto it = outgoing_.find(id);
    return it == outgoing_.end() ? none : it->second;
  }

  std::size_t sense_count() const { return sense_count_; }

 private:
  std::map<std::string, std::vector<SenseEntry>, std::less<>> entries_;
  std::unordered_map<SenseID, std::pair<std::string, std::size_t>, SenseIDHash> positions_;
  std::vector<Relation> relations_;
  std::unordered_map<SenseID, std::vector<std::size_t>, SenseIDHash> outgoing_;
  std::size_t sense_count_ = 0;
};

// --- inventory file --------------------------------------------------------
//
//   S<TAB>lemma<TAB>pos<TAB>index<TAB>gloss tokens
//   R<TAB>type<TAB>lemma#pos#index<TAB>(lemma#pos#index | lemma)
//
// Blank lines and lines starting with '#' are ignored. Relations may refer
// to senses declared later in the file.

inline RelationTarget parse_relation_target(std::string_view field, std::size_t line_no) {
  if (field.find('#') == std::string_view::npos) {
    if (!valid_lemma(field)) throw parse_error(line_no, "malformed relation target", std::string(field));
    return std::string(field);
  }
  auto id = parse_sense_id(field);
  if (!id) throw parse_error(line_no, "malformed relation target", std::string(field));
  return *id;
}

inline SenseInventory parse_inventory(std::istream& in, std::string_view source = "<stream>") {
  SenseInventory inv;
  struct PendingRelation {
    Relation rel;
    std::size_t line;
  };
  std::vector<PendingRelation> pending;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    text::strip_cr(line);
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto f = text::split(line, '\t');
    if (f[0] == "S") {
      if (f.size() < 4 || f.size() > 5) throw parse_error(line_no, "malformed sense record", "expected 4 or 5 fields");
      auto pos = parse_pos(f[2]);
      if (!pos) throw parse_error(line_no, "unknown part of speech", std::string(f[2]));
      auto index = text::parse_int<std::uint32_t>(f[3]);
      if (!index || *index == 0) throw parse_error(line_no, "malformed sense index", std::string(f[3]));
      if (!valid_lemma(f[1])) throw parse_error(line_no, "invalid lemma", std::string(f[1]));
      SenseEntry entry{SenseID{std::string(f[1]), *pos, *index}, {}};
      if (f.size() == 5) {
        for (auto tok : text::split_ws(f[4])) entry.gloss_tokens.emplace_back(tok);
      }
      if (inv.contains(entry.id)) throw parse_error(line_no, "duplicate sense", entry.id.key());
      try {
        inv.add_sense(std::move(entry));
      } catch (const DomainError& e) {
        throw parse_error(line_no, "sense order violation", e.what());
      }
    } else if (f[0] == "R") {
      if (f.size() != 4) throw parse_error(line_no, "malformed relation record", "expected 4 fields");
      auto type = parse_relation_type(f[1]);
      if (!type) throw parse_error(line_no, "unknown relation type", std::string(f[1]));
      auto src = parse_sense_id(f[2]);
      if (!src) throw parse_error(line_no, "malformed relation source", std::string(f[2]));
      pending.push_back({Relation{*type, *src, parse_relation_target(f[3], line_no)}, line_no});
    } else {
      throw parse_error(line_no, "unknown record kind", std::string(f[0]));
    }
  }

  for (auto& p : pending) {
    try {
      inv.add_relation(std::move(p.rel));
    } catch (const DomainError& e) {
      throw parse_error(p.line, "dangling relation", e.what());
    }
  }
  log::debug(source, ": ", inv.sense_count(), " senses, ", inv.relations().size(), " relations");
  return inv;
}

inline SenseInventory load_inventory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open inventory " + path.string());
  return parse_inventory(in, path.string());
}

inline std::string format_inventory(const SenseInventory& inv) {
  std::string out;
  for (const auto& [lemma, list] : inv.entries()) {
    for (const auto& e : list) {
      out += "S\t" + e.id.lemma + "\t" + std::string(pos_name(e.id.pos)) + "\t" + std::to_string(e.id.index) + "\t";
      for (std::size_t i = 0; i < e.gloss_tokens.size(); ++i) {
        if (i) out += ' ';
        out += e.gloss_tokens[i];
      }
      out += '\n';
    }
  }
  for (const auto& r : inv.relations()) {
    out += "R\t" + std::string(relation_name(r.type)) + "\t" + r.source.key() + "\t" + target_key(r.target) + "\n";
  }
  return out;
}

inline std::vector<RelationTarget> related_senses(const SenseInventory& inv, const SenseID& s,
                                                  const RelationTypeSet& types) {
  std::vector<RelationTarget> out;
  for (auto idx : inv.relations_from(s)) {
    const auto& r = inv.relations()[idx];
    if (types.contains(r.type)) out.push_back(r.target);
  }
  return out;
}

// --- constraints -----------------------------------------------------------

enum class Polarity : std::uint8_t { attract, repel };

using PolarityMap = std::array<Polarity, 4>;  // indexed by RelationType

inline PolarityMap default_polarity_map() {
  PolarityMap m{};
  m[std::size_t(RelationType::synonym)] = Polarity::attract;
  m[std::size_t(RelationType::hyponym)] = Polarity::attract;
  m[std::size_t(RelationType::hypernym)] = Polarity::attract;
  m[std::size_t(RelationType::antonym)] = Polarity::repel;
  return m;
}

inline Polarity polarity_of(const PolarityMap& m, RelationType t) { return m[std::size_t(t)]; }

struct Constraint {
  SenseID left;
  SenseID right;
  double weight = 1.0;
  RelationType type = RelationType::synonym;

  bool operator==(const Constraint&) const = default;
};

struct ConstraintSet {
  std::vector<Constraint> attract;
  std::vector<Constraint> repel;

  bool empty() const { return attract.empty() && repel.empty(); }
  std::size_t size() const { return attract.size() + repel.size(); }
};

// Per relation type. candidates == kept + every dropped_* counter.
struct ConstraintCounts {
  std::size_t relations = 0;           // input relations of this type
  std::size_t ambiguous = 0;           // of which sense-to-lemma
  std::size_t ambiguous_excluded = 0;  // sense-to-lemma relations left out (expansion off)
  std::size_t candidates = 0;          // sense pairs generated
  std::size_t dropped_unembedded = 0;
  std::size_t dropped_self = 0;
  std::size_t dropped_duplicate = 0;
  std::size_t dropped_conflict = 0;    // pair already present with the opposite polarity
  std::size_t kept = 0;

  bool balanced() const {
    return candidates == kept + dropped_unembedded + dropped_self + dropped_duplicate + dropped_conflict;
  }
};

struct ConstraintReport {
  std::array<ConstraintCounts, 4> by_type{};
  const ConstraintCounts& operator[](RelationType t) const { return by_type[std::size_t(t)]; }
  ConstraintCounts& operator[](RelationType t) { return by_type[std::size_t(t)]; }
};

struct ExtractOptions {
  // Expand sense-to-lemma relations into one constraint per target sense,
  // each weighted 1/k. When false they are excluded.
  bool expand_ambiguous = true;
};

namespace detail {

// Collects unique constraints and keeps the two polarities disjoint.
class ConstraintCollector {
 public:
  ConstraintCollector(const EmbeddingStore& store, const PolarityMap& polarity, ConstraintReport& report)
      : store_(store), polarity_(polarity), report_(report) {}

  void offer(RelationType type, const SenseID& a, const SenseID& b, double weight) {
    auto& c = report_[type];
    ++c.candidates;
    if (a == b) {
      ++c.dropped_self;
      return;
    }
    auto ka = a.key();
    auto kb = b.key();
    if (!store_.contains(ka) || !store_.contains(kb)) {
      ++c.dropped_unembedded;
      return;
    }
    Polarity p = polarity_of(polarity_, type);
    auto& own = p == Polarity::attract ? attract_seen_ : repel_seen_;
    auto& other = p == Polarity::attract ? repel_seen_ : attract_seen_;
    if (other.contains({ka, kb}) || other.contains({kb, ka})) {
      ++c.dropped_conflict;
      return;
    }
    if (!own.insert({ka, kb}).second) {
      ++c.dropped_duplicate;
      return;
    }
    ++c.kept;
    auto& list = p == Polarity::attract ? out_.attract : out_.repel;
    list.push_back(Constraint{a, b, weight, type});
  }

  ConstraintSet take() { return std::move(out_); }

 private:
  const EmbeddingStore& store_;
  const PolarityMap& polarity_;
  ConstraintReport& report_;
  std::set<std::pair<std::string, std::string>> attract_seen_;
  std::set<std::pair<std::string, std::string>> repel_seen_;
  ConstraintSet out_;
};

}  // namespace detail

// Turns inventory relations into optimizer constraints over the senses that
// have a vector in `store` (keys are SenseID::key()).
inline ConstraintSet extract_constraints(const SenseInventory& inv, const EmbeddingStore& store,
                                         const PolarityMap& polarity, ConstraintReport* report = nullptr,
                                         const ExtractOptions& opts = {}) {
  ConstraintReport local;
  ConstraintReport& rep = report ? *report : local;
  rep = ConstraintReport{};
  detail::ConstraintCollector collector(store, polarity, rep);

  for (const auto& r : inv.relations()) {
    auto& c = rep[r.type];
    ++c.relations;
    if (const auto* t = std::get_if<SenseID>(&r.target)) {
      collector.offer(r.type, r.source, *t, 1.0);
      continue;
    }
    ++c.ambiguous;
    if (!opts.expand_ambiguous) {
      ++c.ambiguous_excluded;
      continue;
    }
    auto targets = inv.senses_of(std::get<std::string>(r.target));
    const double w = 1.0 / static_cast<double>(targets.size());
    for (const auto& t : targets) collector.offer(r.type, r.source, t, w);
  }

  for (auto t : kAllRelationTypes) {
    const auto& c = rep[t];
    if (c.relations == 0) continue;
    log::info("constraints ", relation_name(t), ": relations=", c.relations, " candidates=", c.candidates,
              " kept=", c.kept, " unembedded=", c.dropped_unembedded, " self=", c.dropped_self,
              " duplicate=", c.dropped_duplicate, " conflict=", c.dropped_conflict);
  }
  return collector.take();
}

}  // namespace sensefit
