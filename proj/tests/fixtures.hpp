#pragma once

// Deterministic synthetic data shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sensefit/embedding_store.hpp"
#include "sensefit/eval.hpp"
#include "sensefit/lexicon.hpp"
#include "sensefit/reldisamb.hpp"
#include "sensefit/wsd.hpp"

namespace fixtures {

using namespace sensefit;

inline Vector gaussian(std::mt19937_64& rng, std::size_t dim, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  Vector v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

inline Vector unit(Vector v) {
  double n = norm(v);
  for (auto& x : v) x /= n;
  return v;
}

inline Vector random_unit(std::mt19937_64& rng, std::size_t dim) { return unit(gaussian(rng, dim)); }

inline Vector add_noise(const Vector& c, std::mt19937_64& rng, double sigma) {
  auto n = gaussian(rng, c.size(), sigma);
  Vector out(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k] + n[k];
  return out;
}

inline std::string numbered(const char* prefix, std::size_t i, int width = 2) {
  std::string digits = std::to_string(i);
  while (int(digits.size()) < width) digits.insert(digits.begin(), '0');
  return prefix + digits;
}

inline SenseID noun(const std::string& lemma, std::uint32_t index = 1) { return SenseID{lemma, Pos::noun, index}; }

// Scratch directory removed on destruction. The tag keeps parallel test
// processes apart.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("sensefit_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// --- 20-sense specialization fixture ---------------------------------------
//
// 20 single-sense nouns. Senses 0..9 carry 9 synonym pairs (random,
// near-orthogonal vectors); senses 10..15 form 3 antonym pairs, each pair
// near its own base direction; senses 16..19 are in no relation.

struct FitFixture {
  EmbeddingStore words;
  SenseInventory inventory;
  std::vector<std::pair<SenseID, SenseID>> attract_pairs;
  std::vector<std::pair<SenseID, SenseID>> repel_pairs;
  std::vector<SenseID> untouched;
};

inline FitFixture make_fit_fixture(std::uint64_t seed = 7, std::size_t dim = 25) {
  std::mt19937_64 rng(seed);
  FitFixture f{EmbeddingStore(dim), {}, {}, {}, {}};
  auto lemma = [](std::size_t i) { return numbered("w", i); };

  Vector base;
  for (std::size_t i = 0; i < 20; ++i) {
    if (i >= 10 && i < 16 && i % 2 == 0) base = random_unit(rng, dim);
    Vector v = (i >= 10 && i < 16) ? unit(add_noise(base, rng, 0.12)) : random_unit(rng, dim);
    f.words.add(lemma(i), v);
    // Two gloss words near the lemma, one unrelated.
    std::vector<std::string> gloss;
    for (std::size_t g = 0; g < 3; ++g) {
      auto tok = numbered("g", i * 3 + g, 3);
      f.words.add(tok, g < 2 ? unit(add_noise(v, rng, 0.08)) : random_unit(rng, dim));
      gloss.push_back(tok);
    }
    f.inventory.add_sense({noun(lemma(i)), gloss});
  }
  const std::vector<std::pair<int, int>> attract = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9},
                                                    {0, 2}, {4, 6}, {1, 3}, {5, 7}};
  const std::vector<std::pair<int, int>> repel = {{10, 11}, {12, 13}, {14, 15}};
  for (auto [a, b] : attract) {
    f.attract_pairs.emplace_back(noun(lemma(a)), noun(lemma(b)));
    f.inventory.add_relation({RelationType::synonym, noun(lemma(a)), noun(lemma(b))});
  }
  for (auto [a, b] : repel) {
    f.repel_pairs.emplace_back(noun(lemma(a)), noun(lemma(b)));
    f.inventory.add_relation({RelationType::antonym, noun(lemma(a)), noun(lemma(b))});
  }
  for (std::size_t i = 16; i < 20; ++i) f.untouched.push_back(noun(lemma(i)));
  return f;
}

// --- symmetric relation disambiguation fixture -----------------------------
//
// 40 lemmas with 2 or 3 senses. Senses are grouped into latent clusters of
// distinct lemmas; synonym cliques span each cluster, hyponym/hypernym and
// antonym links are planted in both directions. Every relation is
// sense-to-lemma; the planted target sense is the gold answer. Word vectors
// are the mean of the lemma's sense-cluster centroids plus noise.

struct RelFixture {
  EmbeddingStore words;
  SenseInventory inventory;
  ResolutionMap gold;
};

inline RelFixture make_reldisamb_fixture(std::uint64_t seed = 11, std::size_t dim = 30, double noise = 0.02,
                                         double link_spread = 0.8) {
  std::mt19937_64 rng(seed);
  RelFixture f{EmbeddingStore(dim), {}, {}};
  const std::size_t n_lemmas = 40;
  std::vector<SenseID> senses;
  for (std::size_t i = 0; i < n_lemmas; ++i) {
    auto lemma = numbered("r", i);
    std::uint32_t k = 2 + std::uint32_t(i % 2);
    for (std::uint32_t s = 1; s <= k; ++s) {
      f.inventory.add_sense({noun(lemma, s), {}});
      senses.push_back(noun(lemma, s));
    }
  }

  // Clusters of 3 (sometimes 2) senses with pairwise distinct lemmas.
  std::vector<SenseID> pool = senses;
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::vector<SenseID>> clusters;
  while (!pool.empty()) {
    std::vector<SenseID> c{pool.back()};
    pool.pop_back();
    for (std::size_t j = pool.size(); j-- > 0 && c.size() < 3;) {
      bool clash = std::any_of(c.begin(), c.end(), [&](const SenseID& m) { return m.lemma == pool[j].lemma; });
      if (clash) continue;
      c.push_back(pool[j]);
      pool.erase(pool.begin() + std::ptrdiff_t(j));
    }
    clusters.push_back(std::move(c));
  }

  // Centroids follow the planted links: a hyponym cluster lies near its
  // hypernym cluster, an antonym cluster roughly opposite its partner.
  std::vector<Vector> centroid(clusters.size());
  std::map<SenseID, std::size_t> cluster_of;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& s : clusters[c]) cluster_of[s] = c;
  }

  std::set<std::pair<SenseID, std::string>> used;  // (source, target lemma)
  auto lemmas_of = [&](std::size_t c) {
    std::set<std::string> out;
    for (const auto& s : clusters[c]) out.insert(s.lemma);
    return out;
  };
  auto plant = [&](RelationType t, const SenseID& src, const SenseID& tgt) {
    if (src.lemma == tgt.lemma || used.contains({src, tgt.lemma})) return false;
    used.insert({src, tgt.lemma});
    Relation r{t, src, tgt.lemma};
    f.inventory.add_relation(r);
    f.gold[key_of(r)] = tgt;
    return true;
  };

  for (const auto& c : clusters) {
    for (const auto& a : c) {
      for (const auto& b : c) {
        if (a != b) plant(RelationType::synonym, a, b);
      }
    }
  }
  // Links between neighbouring clusters whose lemma sets are disjoint, so a
  // source never relates to the same lemma under two relation types.
  for (std::size_t c = 0; c < clusters.size(); c += 2) {
    centroid[c] = random_unit(rng, dim);
    const std::size_t d = c + 1;
    if (d == clusters.size()) break;
    auto lc = lemmas_of(c);
    auto ld = lemmas_of(d);
    bool disjoint = std::none_of(lc.begin(), lc.end(), [&](const std::string& l) { return ld.contains(l); });
    bool antonyms = (c / 2) % 2 == 1;
    if (!disjoint) {
      centroid[d] = random_unit(rng, dim);
      continue;
    }
    Vector offset = gaussian(rng, dim, link_spread / std::sqrt(double(dim)));
    centroid[d] = Vector(dim);
    for (std::size_t k = 0; k < dim; ++k) centroid[d][k] = (antonyms ? -centroid[c][k] : centroid[c][k]) + offset[k];
    centroid[d] = unit(centroid[d]);
    for (std::size_t i = 0; i < clusters[c].size(); ++i) {
      const auto& x = clusters[c][i];
      const auto& y = clusters[d][i % clusters[d].size()];
      if (antonyms) {
        plant(RelationType::antonym, x, y);
        plant(RelationType::antonym, y, x);
      } else {
        plant(RelationType::hyponym, x, y);
        plant(RelationType::hypernym, y, x);
      }
    }
  }

  for (const auto& [lemma, list] : f.inventory.entries()) {
    Vector mean(dim, 0.0);
    for (const auto& e : list) {
      const auto& c = centroid[cluster_of.at(e.id)];
      for (std::size_t k = 0; k < dim; ++k) mean[k] += c[k] / double(list.size());
    }
    f.words.add(lemma, add_noise(mean, rng, noise));
  }
  return f;
}

// --- WSD inventory with 200 senses ------------------------------------------

struct WsdFixture {
  EmbeddingStore words;
  EmbeddingStore senses;
  SenseInventory inventory;
  std::vector<WSDInstance> corpus;
  std::vector<std::string> vocabulary;
};

inline WsdFixture make_wsd_fixture(std::uint64_t seed = 3, std::size_t n_instances = 1000, std::size_t dim = 12) {
  std::mt19937_64 rng(seed);
  WsdFixture f{EmbeddingStore(dim), EmbeddingStore(dim), {}, {}, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  for (std::size_t i = 0; i < 300; ++i) {
    f.vocabulary.push_back(numbered("v", i, 3));
    f.words.add(f.vocabulary.back(), gaussian(rng, dim));
  }
  const std::size_t n_lemmas = 50;
  std::vector<SenseID> all;
  for (std::size_t i = 0; i < n_lemmas; ++i) {
    auto lemma = numbered("t", i);
    if (i % 10 != 9) f.words.add(lemma, gaussian(rng, dim));  // a few lemmas lack a word vector
    f.vocabulary.push_back(lemma);
    Pos pos = kAllPos[i % 3];
    for (std::uint32_t s = 1; s <= 4; ++s) {
      std::vector<std::string> gloss;
      std::size_t len = pick(7);  // 0..6 tokens, empty glosses included
      for (std::size_t g = 0; g < len; ++g) {
        gloss.push_back(u(rng) < 0.15 ? "oov" + std::to_string(pick(50)) : f.vocabulary[pick(300)]);
      }
      SenseID id{lemma, pos, s};
      f.inventory.add_sense({id, gloss});
      all.push_back(id);
      if (u(rng) < 0.85) f.senses.add(id.key(), gaussian(rng, dim));
    }
  }
  for (const auto& id : all) {
    std::size_t n_rel = pick(4);
    for (std::size_t r = 0; r < n_rel; ++r) {
      auto type = kAllRelationTypes[pick(4)];
      const auto& tgt = all[pick(all.size())];
      if (tgt.lemma == id.lemma) continue;
      if (u(rng) < 0.3) {
        f.inventory.add_relation({type, id, tgt.lemma});
      } else {
        f.inventory.add_relation({type, id, tgt});
      }
    }
  }
  for (std::size_t i = 0; i < n_instances; ++i) {
    WSDInstance inst;
    std::size_t len = 1 + pick(30);
    for (std::size_t t = 0; t < len; ++t) {
      double r = u(rng);
      inst.tokens.push_back(r < 0.2 ? "unk" + std::to_string(pick(20)) : f.vocabulary[pick(f.vocabulary.size())]);
    }
    inst.lemmas = inst.tokens;
    inst.target_index = pick(len);
    const auto& target = all[pick(all.size())];
    inst.target_lemma = target.lemma;
    inst.pos = u(rng) < 0.05 ? kAllPos[pick(4)] : target.pos;
    inst.tokens[inst.target_index] = target.lemma;
    inst.gold = SenseID{target.lemma, target.pos, std::uint32_t(1 + pick(4))};
    f.corpus.push_back(std::move(inst));
  }
  return f;
}

// --- latent-cluster similarity fixture -------------------------------------
//
// Two-sense lemmas whose senses sit in different latent clusters; synonym
// relations connect same-cluster senses. Word vectors blend both senses, so
// the unspecialized sense vectors confuse the clusters. Gold similarity is
// derived from the latent centroids.

struct SimFixture {
  EmbeddingStore words;
  SenseInventory inventory;
  std::vector<SimilarityPair> dataset;
  std::vector<SenseID> untouched;
};

inline SimFixture make_simsense_fixture(std::uint64_t seed = 5, std::size_t dim = 30, double gloss_noise = 0.7) {
  std::mt19937_64 rng(seed);
  SimFixture f{EmbeddingStore(dim), {}, {}, {}};
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const std::size_t n_clusters = 10;
  const std::size_t n_lemmas = 30;
  std::vector<Vector> centroid;
  for (std::size_t c = 0; c < n_clusters; ++c) centroid.push_back(random_unit(rng, dim));

  std::map<SenseID, std::size_t> cluster_of;
  std::vector<SenseID> senses;
  for (std::size_t i = 0; i < n_lemmas; ++i) {
    auto lemma = numbered("s", i);
    std::size_t c1 = pick(n_clusters);
    std::size_t c2 = (c1 + 1 + pick(n_clusters - 1)) % n_clusters;
    Vector mean(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) mean[k] = 0.5 * (centroid[c1][k] + centroid[c2][k]);
    f.words.add(lemma, add_noise(mean, rng, 0.05));
    std::uint32_t idx = 1;
    for (auto c : {c1, c2}) {
      std::vector<std::string> gloss;
      for (std::size_t g = 0; g < 3; ++g) {
        auto tok = "gl" + std::to_string(i) + "_" + std::to_string(idx) + "_" + std::to_string(g);
        f.words.add(tok, add_noise(centroid[c], rng, gloss_noise));
        gloss.push_back(tok);
      }
      SenseID id = noun(lemma, idx++);
      f.inventory.add_sense({id, gloss});
      cluster_of[id] = c;
      senses.push_back(id);
    }
  }
  // Lemmas kept out of every relation.
  for (std::size_t i = 0; i < 4; ++i) {
    auto lemma = numbered("u", i);
    f.words.add(lemma, random_unit(rng, dim));
    f.inventory.add_sense({noun(lemma), {}});
    f.untouched.push_back(noun(lemma));
  }
  for (std::size_t a = 0; a < senses.size(); ++a) {
    for (std::size_t b = a + 1; b < senses.size(); ++b) {
      if (senses[a].lemma == senses[b].lemma || cluster_of[senses[a]] != cluster_of[senses[b]]) continue;
      f.inventory.add_relation({RelationType::synonym, senses[a], senses[b]});
    }
  }
  for (std::size_t n = 0; n < 300; ++n) {
    const auto& a = senses[pick(senses.size())];
    const auto& b = senses[pick(senses.size())];
    if (a.lemma == b.lemma) continue;
    double sim = cosine(centroid[cluster_of[a]], centroid[cluster_of[b]]);
    f.dataset.push_back({a, b, 5.0 * (1.0 + sim), std::nullopt});
  }
  return f;
}

}  // namespace fixtures
