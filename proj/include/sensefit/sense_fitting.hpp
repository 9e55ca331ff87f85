#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sensefit/embedding_store.hpp"
#include "sensefit/lexicon.hpp"
#include "sensefit/log.hpp"

namespace sensefit {

inline constexpr std::uint64_t kDefaultSeed = 42;

// Defaults follow the reference Attract-Repel configuration; delta is the
// gloss-token inclusion threshold.
struct SenseFitConfig {
  double delta = 0.05;
  double attract_margin = 0.6;
  double repel_margin = 0.0;
  double reg_lambda = 1e-9;
  std::size_t batch_size = 50;
  std::size_t epochs = 5;
  double learning_rate = 0.05;
  std::uint64_t rng_seed = kDefaultSeed;

  void validate() const {
    if (!(delta >= -1.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [-1, 1]");
    if (!(attract_margin >= 0.0) || !(repel_margin >= 0.0)) throw std::invalid_argument("margins must be >= 0");
    if (!(reg_lambda >= 0.0)) throw std::invalid_argument("reg_lambda must be >= 0");
    if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  }
};

// Sense vectors keyed by SenseID::key(), plus the snapshot the regularizer
// pulls towards. Both tables share one key order.
struct SenseEmbeddingStore {
  EmbeddingStore current;
  EmbeddingStore originals;

  static SenseEmbeddingStore from_normalized(EmbeddingStore vectors) {
    SenseEmbeddingStore s{vectors, vectors};
    return s;
  }

  std::size_t size() const { return current.size(); }
  std::size_t dimension() const { return current.dimension(); }
  std::optional<VectorView> lookup(const SenseID& id) const { return current.lookup(id.key()); }
};

// --- initialization --------------------------------------------------------

// Centroid of the lemma's word vector and every gloss-token vector whose
// cosine to it is strictly above cfg.delta. nullopt when the lemma has no
// word vector.
inline std::optional<Vector> init_sense_embedding(const EmbeddingStore& words, const SenseEntry& entry,
                                                  const SenseFitConfig& cfg) {
  auto lemma_vec = words.lookup(words.key_for(entry.id.lemma));
  if (!lemma_vec) return std::nullopt;
  std::vector<VectorView> members{*lemma_vec};
  for (const auto& tok : entry.gloss_tokens) {
    auto g = words.lookup(words.key_for(tok));
    if (!g) continue;
    auto c = try_cosine(*g, *lemma_vec);
    if (c && *c > cfg.delta) members.push_back(*g);
  }
  return centroid(std::span<const VectorView>(members));
}

struct InitReport {
  std::size_t initialized = 0;
  std::vector<SenseID> skipped;
};

inline SenseEmbeddingStore init_all(const EmbeddingStore& words, const SenseInventory& inv, const SenseFitConfig& cfg,
                                    InitReport* report = nullptr) {
  InitReport local;
  InitReport& rep = report ? *report : local;
  rep = InitReport{};
  EmbeddingStore vectors(words.dimension());
  for (const auto& [lemma, list] : inv.entries()) {
    for (const auto& entry : list) {
      auto v = init_sense_embedding(words, entry, cfg);
      double n = v ? norm(*v) : 0.0;
      if (!v || n == 0.0) {
        rep.skipped.push_back(entry.id);
        continue;
      }
      for (double& x : *v) x /= n;
      vectors.add(entry.id.key(), *v);
      ++rep.initialized;
    }
  }
  if (!rep.skipped.empty()) {
    log::warn("sense initialization skipped ", rep.skipped.size(), " sense(s) without a usable lemma vector");
  }
  return SenseEmbeddingStore::from_normalized(std::move(vectors));
}

// --- batch objective -------------------------------------------------------

// A constraint resolved to row numbers of the sense store.
struct PairRows {
  std::size_t left = 0;
  std::size_t right = 0;
  double weight = 1.0;
};

struct PairNegatives {
  std::optional<std::size_t> left;
  std::optional<std::size_t> right;
};

struct PreparedBatch {
  std::vector<PairRows> attract;
  std::vector<PairRows> repel;
  std::vector<PairNegatives> attract_neg;
  std::vector<PairNegatives> repel_neg;
  std::vector<std::size_t> touched;  // sorted, unique
};

struct BatchLoss {
  double attract = 0.0;
  double repel = 0.0;
  double reg = 0.0;
  double total() const { return attract + repel + reg; }
};

namespace detail {

// Picks, for row `x`, the pool member with the highest cosine, skipping the
// pair's own rows. Earlier pool entries win ties.
inline std::optional<std::size_t> pick_negative(const EmbeddingStore& table, std::size_t x, std::size_t partner,
                                                const std::vector<std::size_t>& pool) {
  std::optional<std::size_t> best;
  double best_cos = 0.0;
  for (auto cand : pool) {
    if (cand == x || cand == partner) continue;
    auto c = try_cosine(table.row(x), table.row(cand));
    if (!c) continue;
    if (!best || *c > best_cos) {
      best = cand;
      best_cos = *c;
    }
  }
  return best;
}

inline double hinge(double z) { return z > 0.0 ? z : 0.0; }

// d cos(a, b) / d a, accumulated as scale * gradient into out.
inline void add_cosine_grad(VectorView a, VectorView b, double scale, std::span<double> out) {
  double na = norm(a);
  double nb = norm(b);
  double c = dot(a, b) / (na * nb);
  double inv_ab = 1.0 / (na * nb);
  double inv_aa = c / (na * na);
  for (std::size_t k = 0; k < a.size(); ++k) out[k] += scale * (b[k] * inv_ab - a[k] * inv_aa);
}

inline double raw_cos(VectorView a, VectorView b) { return dot(a, b) / (norm(a) * norm(b)); }

}  // namespace detail

// Selects in-batch negatives against the current vectors. The pool is every
// row of the batch, attract pairs first, in batch order.
inline PreparedBatch prepare_batch(const EmbeddingStore& table, std::vector<PairRows> attract,
                                   std::vector<PairRows> repel) {
  PreparedBatch b;
  b.attract = std::move(attract);
  b.repel = std::move(repel);
  std::vector<std::size_t> pool;
  for (const auto& p : b.attract) pool.insert(pool.end(), {p.left, p.right});
  for (const auto& p : b.repel) pool.insert(pool.end(), {p.left, p.right});

  for (const auto& p : b.attract) {
    b.attract_neg.push_back({detail::pick_negative(table, p.left, p.right, pool),
                             detail::pick_negative(table, p.right, p.left, pool)});
  }
  for (const auto& p : b.repel) {
    b.repel_neg.push_back({detail::pick_negative(table, p.left, p.right, pool),
                           detail::pick_negative(table, p.right, p.left, pool)});
  }
  b.touched = pool;
  auto add_neg = [&](const PairNegatives& n) {
    if (n.left) b.touched.push_back(*n.left);
    if (n.right) b.touched.push_back(*n.right);
  };
  for (const auto& n : b.attract_neg) add_neg(n);
  for (const auto& n : b.repel_neg) add_neg(n);
  std::sort(b.touched.begin(), b.touched.end());
  b.touched.erase(std::unique(b.touched.begin(), b.touched.end()), b.touched.end());
  return b;
}

// Batch objective with the negatives held fixed:
//   attract: w * [hinge(m_a + cos(x_l,t_l) - cos(x_l,x_r)) + hinge(m_a + cos(x_r,t_r) - cos(x_r,x_l))]
//   repel:   w * [hinge(m_r + cos(x_l,x_r) - cos(x_l,t_l)) + hinge(m_r + cos(x_r,x_l) - cos(x_r,t_r))]
//   reg:     lambda * sum over touched rows of |x - x_orig|^2
// When `grad` is given it receives d(total)/d(row) for each touched row,
// laid out as touched.size() consecutive blocks of `dimension` values.
inline BatchLoss batch_objective(const SenseEmbeddingStore& store, const PreparedBatch& batch,
                                 const SenseFitConfig& cfg, std::vector<double>* grad = nullptr) {
  const auto& table = store.current;
  const std::size_t dim = table.dimension();
  BatchLoss loss;
  if (grad) grad->assign(batch.touched.size() * dim, 0.0);

  auto slot = [&](std::size_t row) {
    auto it = std::lower_bound(batch.touched.begin(), batch.touched.end(), row);
    return std::span<double>(grad->data() + std::size_t(it - batch.touched.begin()) * dim, dim);
  };

  // One hinge term: sign_pair * cos(x, partner) + sign_neg * cos(x, neg) + margin.
  auto term = [&](std::size_t x, std::size_t partner, std::optional<std::size_t> neg, double margin,
                  double weight, double sign_pair, double& acc) {
    if (!neg) return;
    double z = margin + sign_pair * detail::raw_cos(table.row(x), table.row(partner)) +
               -sign_pair * detail::raw_cos(table.row(x), table.row(*neg));
    if (z <= 0.0) return;
    acc += weight * z;
    if (!grad) return;
    detail::add_cosine_grad(table.row(x), table.row(partner), weight * sign_pair, slot(x));
    detail::add_cosine_grad(table.row(partner), table.row(x), weight * sign_pair, slot(partner));
    detail::add_cosine_grad(table.row(x), table.row(*neg), -weight * sign_pair, slot(x));
    detail::add_cosine_grad(table.row(*neg), table.row(x), -weight * sign_pair, slot(*neg));
  };

  for (std::size_t i = 0; i < batch.attract.size(); ++i) {
    const auto& p = batch.attract[i];
    const auto& n = batch.attract_neg[i];
    term(p.left, p.right, n.left, cfg.attract_margin, p.weight, -1.0, loss.attract);
    term(p.right, p.left, n.right, cfg.attract_margin, p.weight, -1.0, loss.attract);
  }
  for (std::size_t i = 0; i < batch.repel.size(); ++i) {
    const auto& p = batch.repel[i];
    const auto& n = batch.repel_neg[i];
    term(p.left, p.right, n.left, cfg.repel_margin, p.weight, 1.0, loss.repel);
    term(p.right, p.left, n.right, cfg.repel_margin, p.weight, 1.0, loss.repel);
  }

  if (cfg.reg_lambda > 0.0) {
    for (auto row : batch.touched) {
      auto x = table.row(row);
      auto x0 = store.originals.row(row);
      double sq = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        double d = x[k] - x0[k];
        sq += d * d;
      }
      loss.reg += cfg.reg_lambda * sq;
      if (grad) {
        auto g = slot(row);
        for (std::size_t k = 0; k < dim; ++k) g[k] += 2.0 * cfg.reg_lambda * (x[k] - x0[k]);
      }
    }
  }
  return loss;
}

// Per-coordinate adaptive step sizes (Adagrad), persistent across batches.
class AdagradState {
 public:
  static constexpr double kInitialAccumulator = 0.1;

  void step(std::span<double> x, std::span<const double> g, std::size_t row, double lr) {
    const std::size_t dim = x.size();
    if (accum_.size() < (row + 1) * dim) accum_.resize((row + 1) * dim, kInitialAccumulator);
    double* acc = accum_.data() + row * dim;
    for (std::size_t k = 0; k < dim; ++k) {
      acc[k] += g[k] * g[k];
      x[k] -= lr * g[k] / std::sqrt(acc[k]);
    }
  }

 private:
  std::vector<double> accum_;
};

// One gradient step on the batch; returns the pre-step objective. Rows with
// an all-zero gradient are left bit-identical; every moved row is
// re-normalized to unit length.
inline BatchLoss mini_batch_update(SenseEmbeddingStore& store, std::vector<PairRows> attract_batch,
                                   std::vector<PairRows> repel_batch, const SenseFitConfig& cfg,
                                   AdagradState& optimizer) {
  auto batch = prepare_batch(store.current, std::move(attract_batch), std::move(repel_batch));
  std::vector<double> grad;
  auto loss = batch_objective(store, batch, cfg, &grad);
  const std::size_t dim = store.dimension();
  Vector saved(dim);
  for (std::size_t t = 0; t < batch.touched.size(); ++t) {
    std::span<const double> g(grad.data() + t * dim, dim);
    if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
    auto x = store.current.row(batch.touched[t]);
    std::copy(x.begin(), x.end(), saved.begin());
    optimizer.step(x, g, batch.touched[t], cfg.learning_rate);
    double n = norm(x);
    if (n == 0.0 || !std::isfinite(n)) {
      std::copy(saved.begin(), saved.end(), x.begin());
      continue;
    }
    for (double& v : x) v /= n;
  }
  return loss;
}

inline BatchLoss mini_batch_update(SenseEmbeddingStore& store, std::vector<PairRows> attract_batch,
                                   std::vector<PairRows> repel_batch, const SenseFitConfig& cfg) {
  AdagradState fresh;
  return mini_batch_update(store, std::move(attract_batch), std::move(repel_batch), cfg, fresh);
}

// --- specialization --------------------------------------------------------

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_attract_loss = 0.0;
  double mean_repel_loss = 0.0;
  double mean_reg = 0.0;
  std::size_t steps = 0;
};

struct SpecializeResult {
  SenseEmbeddingStore store;
  std::vector<EpochStats> trace;
};

using EpochCallback = std::function<void(std::size_t epoch, const SenseEmbeddingStore&)>;

inline std::vector<PairRows> to_rows(const EmbeddingStore& table, const std::vector<Constraint>& cs) {
  std::vector<PairRows> out;
  out.reserve(cs.size());
  for (const auto& c : cs) {
    auto l = table.find(c.left.key());
    auto r = table.find(c.right.key());
    if (!l || !r) {
      throw DomainError("constraint " + c.left.key() + " / " + c.right.key() + " refers to a sense without a vector");
    }
    out.push_back({*l, *r, c.weight});
  }
  return out;
}

// Splits `pairs` into batches of `size`; a trailing batch holding a single
// pair is folded into its predecessor.
inline std::vector<std::vector<PairRows>> make_batches(const std::vector<PairRows>& pairs, std::size_t size) {
  std::vector<std::vector<PairRows>> out;
  for (std::size_t i = 0; i < pairs.size(); i += size) {
    auto end = std::min(pairs.size(), i + size);
    out.emplace_back(pairs.begin() + std::ptrdiff_t(i), pairs.begin() + std::ptrdiff_t(end));
  }
  if (out.size() >= 2 && out.back().size() < 2) {
    auto last = std::move(out.back());
    out.pop_back();
    out.back().insert(out.back().end(), last.begin(), last.end());
  }
  return out;
}

inline SpecializeResult specialize(SenseEmbeddingStore store, const ConstraintSet& constraints,
                                   const SenseFitConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  SpecializeResult result;
  if (constraints.empty()) {
    log::warn("specialize called with an empty constraint set; vectors left unchanged");
    result.store = std::move(store);
    return result;
  }
  auto attract = to_rows(store.current, constraints.attract);
  auto repel = to_rows(store.current, constraints.repel);
  if (attract.size() + repel.size() < 2) {
    log::warn("a single constraint has no in-batch negatives; only the regularizer applies");
  }

  std::mt19937_64 rng(cfg.rng_seed);
  AdagradState optimizer;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(attract.begin(), attract.end(), rng);
    std::shuffle(repel.begin(), repel.end(), rng);
    auto a_batches = make_batches(attract, cfg.batch_size);
    auto r_batches = make_batches(repel, cfg.batch_size);
    const std::size_t steps = std::max(a_batches.size(), r_batches.size());

    EpochStats stats;
    stats.epoch = epoch;
    stats.steps = steps;
    for (std::size_t s = 0; s < steps; ++s) {
      auto a = s < a_batches.size() ? a_batches[s] : std::vector<PairRows>{};
      auto r = s < r_batches.size() ? r_batches[s] : std::vector<PairRows>{};
      auto loss = mini_batch_update(store, std::move(a), std::move(r), cfg, optimizer);
      stats.mean_attract_loss += loss.attract;
      stats.mean_repel_loss += loss.repel;
      stats.mean_reg += loss.reg;
    }
    if (steps) {
      stats.mean_attract_loss /= double(steps);
      stats.mean_repel_loss /= double(steps);
      stats.mean_reg /= double(steps);
    }
    log::debug("epoch ", epoch, " attract=", stats.mean_attract_loss, " repel=", stats.mean_repel_loss,
               " reg=", stats.mean_reg);
    result.trace.push_back(stats);
    if (on_epoch) on_epoch(epoch, store);
  }
  result.store = std::move(store);
  return result;
}

inline std::string format_loss_trace(const std::vector<EpochStats>& trace) {
  std::string out = "epoch,mean_attract_loss,mean_repel_loss,mean_reg\n";
  for (const auto& e : trace) {
    out += std::to_string(e.epoch) + "," + text::format_double(e.mean_attract_loss) + "," +
           text::format_double(e.mean_repel_loss) + "," + text::format_double(e.mean_reg) + "\n";
  }
  return out;
}

// --- full pipeline ---------------------------------------------------------

struct SenseFitResult {
  SenseEmbeddingStore store;
  InitReport init;
  ConstraintReport constraints;
  std::vector<EpochStats> trace;
};

inline SenseFitResult sense_fit(const EmbeddingStore& words, const SenseInventory& inv, const PolarityMap& polarity,
                                const SenseFitConfig& cfg, const ExtractOptions& extract = {}) {
  cfg.validate();
  SenseFitResult out;
  auto initial = init_all(words, inv, cfg, &out.init);
  auto constraints = extract_constraints(inv, initial.current, polarity, &out.constraints, extract);
  log::info("sense_fit: ", initial.size(), " sense vectors, ", constraints.attract.size(), " attract / ",
            constraints.repel.size(), " repel constraints");
  auto spec = specialize(std::move(initial), constraints, cfg);
  out.store = std::move(spec.store);
  out.trace = std::move(spec.trace);
  return out;
}

}  // namespace sensefit
