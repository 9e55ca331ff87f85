#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sensefit/common.hpp"
#include "sensefit/log.hpp"

namespace sensefit {

using Vector = std::vector<double>;
using VectorView = std::span<const double>;

enum class CaseMode { as_is, lowercased };

inline std::string_view case_mode_name(CaseMode m) {
  return m == CaseMode::as_is ? "as-is" : "lowercased";
}

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

// Token -> dense vector table. Rows live in one contiguous buffer in
// insertion order; the hash index maps keys to row numbers.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dimension, CaseMode mode = CaseMode::as_is)
      : dimension_(dimension), case_mode_(mode) {
    if (dimension == 0) throw DomainError("embedding dimension must be positive");
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  CaseMode case_mode() const { return case_mode_; }

  // Applies the store's case policy to a lookup key.
  std::string key_for(std::string_view token) const {
    return case_mode_ == CaseMode::lowercased ? text::lowercase(token) : std::string(token);
  }

  // Inserts a row; the key is stored verbatim. Returns false (and leaves the
  // store untouched) if the key already exists.
  bool add(std::string key, VectorView values) {
    if (values.size() != dimension_) {
      throw DomainError("vector for '" + key + "' has " + std::to_string(values.size()) +
                        " components, store dimension is " + std::to_string(dimension_));
    }
    if (index_.contains(key)) return false;
    index_.emplace(key, tokens_.size());
    tokens_.push_back(std::move(key));
    data_.insert(data_.end(), values.begin(), values.end());
    return true;
  }

  std::optional<std::size_t> find(std::string_view key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view key) const { return find(key).has_value(); }

  std::optional<VectorView> lookup(std::string_view key) const {
    if (auto row_id = find(key)) return row(*row_id);
    return std::nullopt;
  }

  VectorView row(std::size_t i) const { return {data_.data() + i * dimension_, dimension_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dimension_, dimension_}; }

  const std::string& token(std::size_t i) const { return tokens_[i]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Bitwise equality of keys (in order) and values.
  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
    return a.dimension_ == b.dimension_ && a.tokens_ == b.tokens_ && a.data_ == b.data_;
  }

 private:
  std::size_t dimension_ = 0;
  CaseMode case_mode_ = CaseMode::as_is;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
};

// --- vector arithmetic -----------------------------------------------------

inline double dot(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(VectorView a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(VectorView a) {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Cosine similarity. Throws DomainError on a zero vector or a size mismatch.
inline double cosine(VectorView a, VectorView b) {
  if (a.size() != b.size()) throw DomainError("cosine of vectors with different dimensions");
  double na = norm(a);
  double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine with a zero-norm vector");
  double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

// Non-throwing variant for call sites where "no similarity" is a value.
inline std::optional<double> try_cosine(VectorView a, VectorView b) {
  if (a.size() != b.size()) return std::nullopt;
  double na = norm(a);
  double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// Componentwise mean. Throws DomainError on an empty list or ragged input.
inline Vector centroid(std::span<const VectorView> vs) {
  if (vs.empty()) throw DomainError("centroid of an empty list");
  Vector out(vs.front().size(), 0.0);
  for (auto v : vs) {
    if (v.size() != out.size()) throw DomainError("centroid of vectors with different dimensions");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  const double n = static_cast<double>(vs.size());
  for (double& x : out) x /= n;
  return out;
}

inline Vector centroid(const std::vector<Vector>& vs) {
  std::vector<VectorView> views(vs.begin(), vs.end());
  return centroid(std::span<const VectorView>(views));
}

// --- store-level operations ------------------------------------------------

struct LoadOptions {
  CaseMode case_mode = CaseMode::as_is;
};

inline EmbeddingStore parse_embeddings(std::istream& in, const LoadOptions& opts = {},
                                       std::string_view source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty embedding file " + std::string(source), 1);
  text::strip_cr(line);
  auto header = text::split_ws(line);
  std::optional<std::size_t> count, dim;
  if (header.size() == 2) {
    count = text::parse_int<std::size_t>(header[0]);
    dim = text::parse_int<std::size_t>(header[1]);
  }
  if (!count || !dim || *dim == 0) {
    throw parse_error(1, "malformed header", "expected '<count> <dimension>' in " + std::string(source));
  }

  EmbeddingStore store(*dim, opts.case_mode);
  Vector values(*dim);
  std::size_t line_no = 1;
  std::size_t rows = 0;
  std::size_t duplicates = 0;
  while (rows < *count && std::getline(in, line)) {
    ++line_no;
    text::strip_cr(line);
    auto fields = text::split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != *dim + 1) {
      throw parse_error(line_no, "dimension mismatch",
                        "token '" + std::string(fields[0]) + "' has " + std::to_string(fields.size() - 1) +
                            " values, expected " + std::to_string(*dim));
    }
    for (std::size_t i = 0; i < *dim; ++i) {
      auto v = text::parse_double(fields[i + 1]);
      if (!v || !std::isfinite(*v)) {
        throw parse_error(line_no, "invalid number",
                          "'" + std::string(fields[i + 1]) + "' for token '" + std::string(fields[0]) + "'");
      }
      values[i] = *v;
    }
    ++rows;
    if (!store.add(store.key_for(fields[0]), values)) {
      ++duplicates;
      log::warn("duplicate token '", fields[0], "' at line ", line_no, " in ", source, "; keeping first occurrence");
    }
  }
  if (rows < *count) {
    log::warn(source, ": header announces ", *count, " rows, found ", rows);
  }
  if (duplicates) log::warn(source, ": ", duplicates, " duplicate token(s) skipped");
  return store;
}

inline EmbeddingStore load_embeddings(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  return parse_embeddings(in, opts, path.string());
}

inline EmbeddingStore filter_vocabulary(const EmbeddingStore& store,
                                        const std::unordered_set<std::string>& keep) {
  EmbeddingStore out(store.dimension(), store.case_mode());
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (keep.contains(store.token(i))) out.add(store.token(i), store.row(i));
  }
  return out;
}

// Scales every row to unit length; zero rows are dropped with a warning.
inline EmbeddingStore normalize_all(const EmbeddingStore& store) {
  EmbeddingStore out(store.dimension(), store.case_mode());
  Vector buf(store.dimension());
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto r = store.row(i);
    double n = norm(r);
    if (n == 0.0) {
      log::warn("dropping zero vector for '", store.token(i), "'");
      continue;
    }
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = r[k] / n;
    out.add(store.token(i), buf);
  }
  return out;
}

inline std::string format_embeddings(const EmbeddingStore& store) {
  std::string out = std::to_string(store.size()) + " " + std::to_string(store.dimension()) + "\n";
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& tok = store.token(i);
    if (tok.empty() || tok.find_first_of(" \t\n\r") != std::string::npos) {
      throw DomainError("token '" + tok + "' cannot be written in word2vec text format");
    }
    out += tok;
    for (double x : store.row(i)) {
      out += ' ';
      out += text::format_general(x, 6);
    }
    out += '\n';
  }
  return out;
}

inline void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, format_embeddings(store));
}

}  // namespace sensefit
