// Copyright 2026 The benchmix Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "benchmix/error.hpp"
#include "benchmix/io.hpp"
#include "benchmix/parallel.hpp"

namespace benchmix {

/// A sentence embedding with unit L2 norm. The only way to build one is
/// through normalize(), so every instance satisfies the invariant.
class EmbeddingVector {
 public:
  /// Scales `raw` to unit length. Idempotent. Rejects empty, zero, or non-finite input.
  static EmbeddingVector normalize(std::vector<double> raw) {
    if (raw.empty()) throw Error(ErrorKind::kDimensionMismatch, "empty embedding");
    double sq = 0.0;
    for (double v : raw) {
      if (!std::isfinite(v)) throw Error(ErrorKind::kNonFiniteEmbedding, "non-finite embedding value");
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorKind::kNonFiniteEmbedding, "embedding has zero or overflowing norm");
    }
    // Vectors already unit length up to the rounding of the sum of squares
    // (at most about n ulps) are kept verbatim, so a stored vector reloads
    // bit-identically instead of drifting by an ulp.
    const double slack = 2.0 * static_cast<double>(raw.size() + 4) * std::numeric_limits<double>::epsilon();
    if (std::abs(sq - 1.0) > slack) {
      for (double& v : raw) v /= norm;
    }
    return EmbeddingVector(std::move(raw));
  }

  std::span<const double> values() const { return values_; }
  std::size_t dimension() const { return values_.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

/// Dot product in index order, clamped to [-1, 1]. Multiplication commutes
/// per term and the summation order is fixed, so the result is exactly
/// symmetric in its arguments.
inline double similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "similarity between dimensions " + std::to_string(a.dimension()) + " and " +
                    std::to_string(b.dimension()));
  }
  const auto x = a.values();
  const auto y = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  return std::clamp(dot, -1.0, 1.0);
}

/// Id-addressed embeddings of one dimension from one provider. Iteration
/// follows insertion order so serialized stores are reproducible.
class EmbeddingStore {
 public:
  EmbeddingStore(std::size_t dimension, std::string fingerprint)
      : dimension_(dimension), fingerprint_(std::move(fingerprint)) {}

  std::size_t dimension() const { return dimension_; }
  const std::string& fingerprint() const { return fingerprint_; }
  std::size_t size() const { return ids_.size(); }
  std::span<const std::string> ids() const { return ids_; }

  void insert(std::string id, EmbeddingVector vector) {
    if (vector.dimension() != dimension_) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "embedding for '" + id + "' has dimension " + std::to_string(vector.dimension()) +
                      ", store expects " + std::to_string(dimension_));
    }
    if (index_.count(id)) throw Error(ErrorKind::kDuplicateId, "duplicate embedding id '" + id + "'");
    index_.emplace(id, vectors_.size());
    ids_.push_back(std::move(id));
    vectors_.push_back(std::move(vector));
  }

  const EmbeddingVector* find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &vectors_[it->second];
  }

  const EmbeddingVector& at(std::string_view id) const {
    if (const auto* v = find(id)) return *v;
    throw Error(ErrorKind::kMissingEmbedding, "no embedding for '" + std::string(id) + "'");
  }

  bool contains(std::string_view id) const { return find(id) != nullptr; }

 private:
  std::size_t dimension_;
  std::string fingerprint_;
  std::vector<std::string> ids_;
  std::vector<EmbeddingVector> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Header line `{dimension, fingerprint}` followed by `{id, vector}` records.
inline std::string serialize_store(const EmbeddingStore& store) {
  Json header;
  header["dimension"] = store.dimension();
  header["fingerprint"] = store.fingerprint();
  std::string out = header.dump() + "\n";
  for (const auto& id : store.ids()) {
    Json rec;
    rec["id"] = id;
    const auto values = store.at(id).values();
    rec["vector"] = std::vector<double>(values.begin(), values.end());
    out += rec.dump();
    out += '\n';
  }
  return out;
}

/// Reads a precomputed-embedding file; every vector is renormalized on load.
inline EmbeddingStore load_store(const std::filesystem::path& path) {
  std::optional<EmbeddingStore> store;
  for_each_json_line(path, [&](const Json& record, const RecordLocation& loc) {
    if (!store) {
      store.emplace(require_field<std::size_t>(record, "dimension", loc),
                    require_field<std::string>(record, "fingerprint", loc));
      if (store->dimension() == 0) throw Error(ErrorKind::kMalformedRecord, loc.str() + ": zero dimension");
      return;
    }
    auto id = require_field<std::string>(record, "id", loc);
    auto values = require_field<std::vector<double>>(record, "vector", loc);
    try {
      store->insert(std::move(id), EmbeddingVector::normalize(std::move(values)));
    } catch (const Error& e) {
      throw Error(e.kind(), loc.str() + ": " + e.what());
    }
  });
  if (!store) throw Error(ErrorKind::kMalformedRecord, path.string() + ": missing store header");
  return std::move(*store);
}

/// Source of raw sentence embeddings. Implementations must be safe to call
/// from several threads at once.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// Model identifier plus dimension, e.g. "all-mpnet-base-v2/768".
  virtual std::string fingerprint() = 0;
  virtual std::size_t dimension() = 0;
  /// Largest batch the provider accepts per call.
  virtual std::size_t max_batch() const { return 256; }
  /// One raw (not necessarily normalized) vector per text, in order.
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
};

/// 64-bit FNV-1a digest rendered as 16 hex digits.
inline std::string content_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Embeddings keyed by the hash of the embedded text, scoped to one provider
/// fingerprint. Re-embedding unchanged text becomes a lookup.
class EmbeddingCache {
 public:
  EmbeddingCache(std::size_t dimension, std::string fingerprint)
      : store_(dimension, std::move(fingerprint)) {}
  explicit EmbeddingCache(EmbeddingStore store) : store_(std::move(store)) {}

  const std::string& fingerprint() const { return store_.fingerprint(); }
  std::size_t dimension() const { return store_.dimension(); }
  const EmbeddingStore& store() const { return store_; }
  std::size_t size() const { return store_.size(); }

  const EmbeddingVector* lookup(std::string_view text) const {
    std::lock_guard lock(mu_);
    return store_.find(content_hash(text));
  }

  void put(std::string_view text, const EmbeddingVector& v) {
    std::lock_guard lock(mu_);
    auto key = content_hash(text);
    if (!store_.contains(key)) store_.insert(std::move(key), v);
  }

 private:
  mutable std::mutex mu_;
  EmbeddingStore store_;
};

struct EmbedOptions {
  std::size_t concurrency = 4;       // provider requests in flight
  EmbeddingCache* cache = nullptr;   // optional; must match the provider fingerprint
};

/// Embeds `texts` through `provider`, returning unit vectors in input order.
/// Cached texts are not sent to the provider.
inline std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts,
                                                EmbeddingProvider& provider,
                                                const EmbedOptions& options = {}) {
  if (texts.empty()) return {};
  const std::size_t dim = provider.dimension();
  if (options.cache && (options.cache->fingerprint() != provider.fingerprint() ||
                        options.cache->dimension() != dim)) {
    throw Error(ErrorKind::kDimensionMismatch, "embedding cache belongs to provider '" +
                                                   options.cache->fingerprint() + "'");
  }

  std::vector<std::optional<EmbeddingVector>> result(texts.size());
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (options.cache) {
      if (const auto* hit = options.cache->lookup(texts[i])) {
        result[i] = *hit;
        continue;
      }
    }
    misses.push_back(i);
  }

  const std::size_t batch = std::max<std::size_t>(1, provider.max_batch());
  const std::size_t n_chunks = (misses.size() + batch - 1) / batch;
  parallel_for(n_chunks, options.concurrency, [&](std::size_t chunk) {
    const std::size_t begin = chunk * batch;
    const std::size_t end = std::min(misses.size(), begin + batch);
    std::vector<std::string> request;
    request.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) request.push_back(texts[misses[k]]);
    auto raw = provider.embed(request);
    if (raw.size() != request.size()) {
      throw Error(ErrorKind::kProviderUnavailable,
                  "provider returned " + std::to_string(raw.size()) + " vectors for " +
                      std::to_string(request.size()) + " texts");
    }
    for (std::size_t k = begin; k < end; ++k) {
      auto& values = raw[k - begin];
      if (values.size() != dim) {
        throw Error(ErrorKind::kDimensionMismatch,
                    "provider returned dimension " + std::to_string(values.size()) + ", expected " +
                        std::to_string(dim));
      }
      const std::size_t i = misses[k];
      result[i] = EmbeddingVector::normalize(std::move(values));
      if (options.cache) options.cache->put(texts[i], *result[i]);
    }
  });

  std::vector<EmbeddingVector> out;
  out.reserve(result.size());
  for (auto& r : result) out.push_back(std::move(*r));
  return out;
}

}  // namespace benchmix
