#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sensefit/embedding_store.hpp"
#include "sensefit/lexicon.hpp"
#include "sensefit/log.hpp"

namespace sensefit {

// --- rank correlation ------------------------------------------------------

// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    double r = (double(i) + double(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Spearman's rho with average ranks for ties. nullopt for fewer than two
// points or a constant side.
inline std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("spearman: inputs differ in length");
  if (xs.size() < 2) return std::nullopt;
  return pearson(average_ranks(xs), average_ranks(ys));
}

// --- similarity datasets ---------------------------------------------------

enum class SampleType : std::uint8_t { positive, negative, false_pair };

inline std::string_view sample_type_name(SampleType t) {
  switch (t) {
    case SampleType::positive: return "positive";
    case SampleType::negative: return "negative";
    case SampleType::false_pair: return "false";
  }
  return "positive";
}

inline std::optional<SampleType> parse_sample_type(std::string_view s) {
  if (s == "positive" || s == "pos") return SampleType::positive;
  if (s == "negative" || s == "neg") return SampleType::negative;
  if (s == "false") return SampleType::false_pair;
  return std::nullopt;
}

struct SimilarityPair {
  SenseID source;
  SenseID target;
  double score = 0.0;  // gold, [0, 10]
  std::optional<SampleType> sample_type;
};

struct SimilarityResult {
  std::optional<double> rho;
  std::size_t scored = 0;
  std::size_t dropped = 0;  // pairs with a missing vector
};

// Model score = cosine of the two sense vectors; pairs with a missing vector
// are dropped and counted.
inline SimilarityResult evaluate_similarity(const EmbeddingStore& sense_vectors,
                                            const std::vector<SimilarityPair>& dataset) {
  SimilarityResult r;
  std::vector<double> model, gold;
  for (const auto& p : dataset) {
    auto a = sense_vectors.lookup(p.source.key());
    auto b = sense_vectors.lookup(p.target.key());
    std::optional<double> c;
    if (a && b) c = try_cosine(*a, *b);
    if (!c) {
      ++r.dropped;
      continue;
    }
    model.push_back(*c);
    gold.push_back(p.score);
  }
  r.scored = model.size();
  if (model.size() >= 2) r.rho = spearman(model, gold);
  return r;
}

//   src_lemma#pos#index<TAB>tgt_lemma#pos#index<TAB>score[<TAB>sample_type]
inline std::vector<SimilarityPair> parse_similarity_dataset(std::istream& in) {
  std::vector<SimilarityPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    text::strip_cr(line);
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() < 3 || f.size() > 4) throw parse_error(line_no, "malformed similarity record", "expected 3 or 4 fields");
    auto src = parse_sense_id(f[0]);
    auto tgt = parse_sense_id(f[1]);
    if (!src || !tgt) throw parse_error(line_no, "malformed sense id");
    auto score = text::parse_double(text::trim(f[2]));
    if (!score || !std::isfinite(*score)) throw parse_error(line_no, "missing or invalid score", std::string(f[2]));
    SimilarityPair p{*src, *tgt, *score, std::nullopt};
    if (f.size() == 4 && !text::trim(f[3]).empty()) {
      p.sample_type = parse_sample_type(text::trim(f[3]));
      if (!p.sample_type) throw parse_error(line_no, "unknown sample type", std::string(f[3]));
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::string format_similarity_dataset(const std::vector<SimilarityPair>& dataset) {
  std::string out;
  for (const auto& p : dataset) {
    out += p.source.key() + "\t" + p.target.key() + "\t" + text::format_double(p.score);
    if (p.sample_type) out += "\t" + std::string(sample_type_name(*p.sample_type));
    out += "\n";
  }
  return out;
}

inline std::vector<SimilarityPair> load_similarity_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return parse_similarity_dataset(in);
}

// --- SimSense-style pair generation ----------------------------------------

struct PairSkeleton {
  SenseID source;
  SenseID target;
  SampleType sample_type = SampleType::positive;

  bool operator==(const PairSkeleton&) const = default;
};

struct GenerationReport {
  std::vector<std::pair<std::string, std::string>> skipped;  // unknown lemma
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t false_pairs = 0;
};

// Two senses are related when a sense-to-sense relation of an accepted type
// links them in either direction.
class SenseRelatedness {
 public:
  SenseRelatedness(const SenseInventory& inv, const RelationTypeSet& types) {
    for (const auto& r : inv.relations()) {
      if (!types.contains(r.type)) continue;
      if (const auto* t = std::get_if<SenseID>(&r.target)) {
        links_.emplace(r.source, *t);
        links_.emplace(*t, r.source);
      }
    }
  }
  bool related(const SenseID& a, const SenseID& b) const { return links_.contains({a, b}); }

 private:
  std::set<std::pair<SenseID, SenseID>> links_;
};

// For each word pair, scanning senses in inventory order:
//  - each source sense's first related target sense gives a positive sample;
//  - for that source sense, the first unrelated target sense gives a negative;
//  - a word pair without any positive yields one false sample (first senses).
inline std::vector<PairSkeleton> generate_simsense_pairs(
    const std::vector<std::pair<std::string, std::string>>& word_pairs, const SenseInventory& inv,
    const RelationTypeSet& relation_types, GenerationReport* report = nullptr) {
  GenerationReport local;
  GenerationReport& rep = report ? *report : local;
  rep = GenerationReport{};
  SenseRelatedness rel(inv, relation_types);
  std::vector<PairSkeleton> out;
  for (const auto& [a, b] : word_pairs) {
    auto sa = inv.senses_of(a);
    auto sb = inv.senses_of(b);
    if (sa.empty() || sb.empty()) {
      rep.skipped.emplace_back(a, b);
      log::warn("simsense: skipping (", a, ", ", b, "): lemma not in inventory");
      continue;
    }
    bool any_positive = false;
    for (const auto& s : sa) {
      auto pos_it = std::find_if(sb.begin(), sb.end(), [&](const SenseID& t) { return rel.related(s, t); });
      if (pos_it == sb.end()) continue;
      any_positive = true;
      out.push_back({s, *pos_it, SampleType::positive});
      ++rep.positive;
      auto neg_it = std::find_if(sb.begin(), sb.end(), [&](const SenseID& t) { return !rel.related(s, t); });
      if (neg_it != sb.end()) {
        out.push_back({s, *neg_it, SampleType::negative});
        ++rep.negative;
      }
    }
    if (!any_positive) {
      out.push_back({sa.front(), sb.front(), SampleType::false_pair});
      ++rep.false_pairs;
    }
  }
  return out;
}

// Skeletons use the dataset layout with "NA" in the score column.
inline std::string format_skeletons(const std::vector<PairSkeleton>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += p.source.key() + "\t" + p.target.key() + "\tNA\t" + std::string(sample_type_name(p.sample_type)) + "\n";
  }
  return out;
}

//   lemma_a<TAB>lemma_b[<TAB>anything]
inline std::vector<std::pair<std::string, std::string>> parse_word_pairs(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    text::strip_cr(line);
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() < 2 || text::trim(f[0]).empty() || text::trim(f[1]).empty()) {
      throw parse_error(line_no, "malformed word pair");
    }
    out.emplace_back(std::string(text::trim(f[0])), std::string(text::trim(f[1])));
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> load_word_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open word pairs " + path.string());
  return parse_word_pairs(in);
}

// --- inter-annotator agreement ---------------------------------------------

struct AnnotationMatrix {
  std::vector<std::string> annotators;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::vector<double>> scores;  // scores[pair][annotator]
};

struct Agreement {
  std::optional<double> rho_bar;
  std::optional<double> sigma_bar;
  std::size_t annotator_pairs = 0;
  std::size_t excluded_annotator_pairs = 0;  // undefined correlation
};

inline double population_stddev(const std::vector<double>& xs) {
  const double n = double(xs.size());
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / n);
}

// rho_bar: mean Spearman over annotator pairs; sigma_bar: mean over items of
// the population standard deviation of that item's scores.
inline Agreement inter_annotator_agreement(const AnnotationMatrix& m) {
  const std::size_t k = m.annotators.size();
  if (k < 2) throw std::invalid_argument("agreement needs at least two annotators");
  if (m.scores.size() < 2) throw std::invalid_argument("agreement needs at least two pairs");
  for (const auto& row : m.scores) {
    if (row.size() != k) throw std::invalid_argument("annotation matrix is incomplete");
  }
  Agreement out;
  std::vector<std::vector<double>> columns(k);
  for (const auto& row : m.scores) {
    for (std::size_t a = 0; a < k; ++a) columns[a].push_back(row[a]);
  }
  double rho_sum = 0.0;
  std::size_t rho_n = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      ++out.annotator_pairs;
      auto r = spearman(columns[a], columns[b]);
      if (!r) {
        ++out.excluded_annotator_pairs;
        log::warn("agreement: correlation of ", m.annotators[a], " and ", m.annotators[b],
                  " is undefined (constant scores); excluded");
        continue;
      }
      rho_sum += *r;
      ++rho_n;
    }
  }
  if (rho_n) out.rho_bar = rho_sum / double(rho_n);
  double sigma_sum = 0.0;
  for (const auto& row : m.scores) sigma_sum += population_stddev(row);
  out.sigma_bar = sigma_sum / double(m.scores.size());
  return out;
}

// Header: annotator ids, optionally preceded by two column labels.
// Rows: src<TAB>tgt<TAB>score_1 ... score_k
inline AnnotationMatrix parse_annotations(std::istream& in) {
  AnnotationMatrix m;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    text::strip_cr(line);
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    if (header.empty()) {
      for (auto h : f) header.emplace_back(text::trim(h));
      continue;
    }
    if (f.size() < 4) throw parse_error(line_no, "annotation row needs src, tgt and at least two scores");
    std::size_t k = f.size() - 2;
    if (m.annotators.empty()) {
      if (header.size() == k + 2) {
        m.annotators.assign(header.begin() + 2, header.end());
      } else if (header.size() == k) {
        m.annotators = header;
      } else {
        throw parse_error(line_no, "score count does not match the header");
      }
    } else if (k != m.annotators.size()) {
      throw parse_error(line_no, "incomplete annotation row");
    }
    std::vector<double> row;
    for (std::size_t i = 2; i < f.size(); ++i) {
      auto v = text::parse_double(text::trim(f[i]));
      if (!v || !std::isfinite(*v)) throw parse_error(line_no, "invalid score", std::string(f[i]));
      row.push_back(*v);
    }
    m.pairs.emplace_back(std::string(f[0]), std::string(f[1]));
    m.scores.push_back(std::move(row));
  }
  return m;
}

inline std::string format_annotations(const AnnotationMatrix& m) {
  std::string out = "src\ttgt";
  for (const auto& a : m.annotators) out += "\t" + a;
  out += "\n";
  for (std::size_t i = 0; i < m.pairs.size(); ++i) {
    out += m.pairs[i].first + "\t" + m.pairs[i].second;
    for (double v : m.scores[i]) out += "\t" + text::format_double(v);
    out += "\n";
  }
  return out;
}

inline AnnotationMatrix load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotations " + path.string());
  return parse_annotations(in);
}

}  // namespace sensefit
