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
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "benchmix/cluster.hpp"
#include "benchmix/embedding.hpp"
#include "benchmix/error.hpp"
#include "benchmix/io.hpp"
#include "benchmix/mixture.hpp"
#include "benchmix/rng.hpp"

namespace benchmix {

/// Binary error matrix of shape (models, entries); 1 marks an incorrect
/// response. Per-model accuracy is derived on construction.
class DifficultyMatrix {
 public:
  DifficultyMatrix(std::vector<std::string> model_ids, std::vector<std::string> entry_ids,
                   std::vector<std::uint8_t> errors)
      : model_ids_(std::move(model_ids)), entry_ids_(std::move(entry_ids)), errors_(std::move(errors)) {
    if (model_ids_.empty() || entry_ids_.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "difficulty matrix needs at least one model and one entry");
    }
    if (errors_.size() != model_ids_.size() * entry_ids_.size()) {
      throw Error(ErrorKind::kInvalidArgument, "difficulty matrix shape does not match its ids");
    }
    for (auto v : errors_) {
      if (v > 1) throw Error(ErrorKind::kInvalidArgument, "difficulty matrix values must be 0 or 1");
    }
    const auto n = static_cast<double>(entry_ids_.size());
    accuracy_.resize(model_ids_.size());
    for (std::size_t j = 0; j < model_ids_.size(); ++j) {
      std::size_t wrong = 0;
      for (auto v : row(j)) wrong += v;
      accuracy_[j] = 1.0 - static_cast<double>(wrong) / n;
    }
  }

  std::size_t n_models() const { return model_ids_.size(); }
  std::size_t n_entries() const { return entry_ids_.size(); }
  std::span<const std::string> model_ids() const { return model_ids_; }
  std::span<const std::string> entry_ids() const { return entry_ids_; }
  /// Accuracy per model (one minus the mean of its row).
  std::span<const double> accuracy() const { return accuracy_; }

  std::span<const std::uint8_t> row(std::size_t model) const {
    return std::span(errors_).subspan(model * entry_ids_.size(), entry_ids_.size());
  }
  std::uint8_t at(std::size_t model, std::size_t entry) const { return errors_[model * entry_ids_.size() + entry]; }

 private:
  std::vector<std::string> model_ids_;
  std::vector<std::string> entry_ids_;
  std::vector<std::uint8_t> errors_;
  std::vector<double> accuracy_;
};

/// File layout: a header `{model_ids, entry_ids}` then one JSON array of 0/1
/// values per model, in model_ids order.
inline DifficultyMatrix load_difficulty(const std::filesystem::path& path) {
  std::vector<std::string> models;
  std::vector<std::string> entries;
  std::vector<std::uint8_t> errors;
  bool have_header = false;
  std::size_t rows = 0;
  for_each_json_line(path, [&](const Json& rec, const RecordLocation& loc) {
    if (!have_header) {
      models = require_field<std::vector<std::string>>(rec, "model_ids", loc);
      entries = require_field<std::vector<std::string>>(rec, "entry_ids", loc);
      have_header = true;
      return;
    }
    if (!rec.is_array() || rec.size() != entries.size()) {
      throw Error(ErrorKind::kMalformedRecord,
                  loc.str() + ": expected an array of " + std::to_string(entries.size()) + " values");
    }
    for (const auto& v : rec) {
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
        throw Error(ErrorKind::kMalformedRecord, loc.str() + ": values must be 0 or 1");
      }
      errors.push_back(static_cast<std::uint8_t>(v.get<int>()));
    }
    ++rows;
  });
  if (!have_header) throw Error(ErrorKind::kMalformedRecord, path.string() + ": missing header");
  if (rows != models.size()) {
    throw Error(ErrorKind::kMalformedRecord, path.string() + ": " + std::to_string(models.size()) +
                                                 " models declared, " + std::to_string(rows) + " rows found");
  }
  return DifficultyMatrix(std::move(models), std::move(entries), std::move(errors));
}

inline std::string serialize_difficulty(const DifficultyMatrix& dm) {
  Json header;
  header["model_ids"] = std::vector<std::string>(dm.model_ids().begin(), dm.model_ids().end());
  header["entry_ids"] = std::vector<std::string>(dm.entry_ids().begin(), dm.entry_ids().end());
  std::string out = header.dump() + "\n";
  for (std::size_t j = 0; j < dm.n_models(); ++j) {
    const auto r = dm.row(j);
    out += Json(std::vector<int>(r.begin(), r.end())).dump();
    out += '\n';
  }
  return out;
}

/// Accuracy-weighted error count per entry: xi_i = sum_j accuracy_j * A[j][i].
/// Errors made by strong models weigh more.
inline std::vector<double> difficulty_scores(const DifficultyMatrix& dm) {
  std::vector<double> xi(dm.n_entries(), 0.0);
  const auto mu = dm.accuracy();
  for (std::size_t j = 0; j < dm.n_models(); ++j) {
    const auto r = dm.row(j);
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] += mu[j] * r[i];
  }
  return xi;
}

/// Reorders per-entry scores to follow `mixed`'s entries.
inline std::vector<double> align_scores(const DifficultyMatrix& dm, std::span<const double> xi,
                                        const MixedBenchmark& mixed) {
  std::unordered_map<std::string, double> by_id;
  for (std::size_t i = 0; i < dm.n_entries(); ++i) by_id.emplace(dm.entry_ids()[i], xi[i]);
  std::vector<double> out;
  out.reserve(mixed.size());
  for (const auto& e : mixed.entries) {
    const auto it = by_id.find(e.entry_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kInvalidArgument, "difficulty matrix has no column for '" + e.entry_id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

struct HardSamplerConfig {
  double lambda = 10.0;
  double tau = 0.15;
  std::size_t n_samples = 1000;
  std::size_t k_clusters = 16;
  std::uint64_t seed = 0;
  std::size_t max_rejections = 0;  // 0 means 50 * n_samples

  std::size_t rejection_budget() const { return max_rejections ? max_rejections : 50 * n_samples; }

  Json to_json() const {
    Json j;
    j["lambda"] = lambda;
    j["tau"] = tau;
    j["n_samples"] = n_samples;
    j["k_clusters"] = k_clusters;
    j["seed"] = seed;
    j["max_rejections"] = rejection_budget();
    return j;
  }

  static HardSamplerConfig from_json(const Json& j) {
    HardSamplerConfig c;
    try {
      c.lambda = j.value("lambda", c.lambda);
      c.tau = j.value("tau", c.tau);
      c.n_samples = j.value("n_samples", c.n_samples);
      c.k_clusters = j.value("k_clusters", c.k_clusters);
      c.seed = j.value("seed", c.seed);
      c.max_rejections = j.value("max_rejections", c.max_rejections);
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::kInvalidArgument, std::string("bad sampler config: ") + e.what());
    }
    return c;
  }
};

struct HardSample {
  MixedBenchmark subset;
  double cluster_distance = 0.0;  // final distance to the parent benchmark
  std::size_t rejections = 0;
  std::vector<std::size_t> accepted;  // parent positions in acceptance order
};

/// Draws the difficulty-first hard subset of `mixed`.
///
/// Scores are divided by their maximum (when positive) and each remaining
/// entry is drawn with probability proportional to exp(lambda * score).
/// A draw is accepted only if the subset can still end within `tau` of the
/// parent's cluster-occupancy histogram. Partial subsets are measured against
/// the final size n: the over-allocation sum_c max(0, count_c / n - ref_c)
/// never decreases as entries are added and equals the total-variation
/// distance once n entries are accepted. Because it never decreases, a
/// rejected cluster stays rejected, so its remaining entries leave the urn;
/// this is the same accepted-sample distribution as redrawing until
/// acceptance.
inline HardSample sample_hard_detailed(const MixedBenchmark& mixed, std::span<const double> xi,
                                       const EmbeddingStore& store, const HardSamplerConfig& config,
                                       std::string version_id = {}) {
  const std::size_t n = config.n_samples;
  if (xi.size() != mixed.size()) {
    throw Error(ErrorKind::kInvalidArgument, "difficulty scores are not aligned with the mixed benchmark");
  }
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "n_samples must be positive");
  if (n > mixed.size()) {
    throw Error(ErrorKind::kInvalidArgument, "n_samples " + std::to_string(n) + " exceeds benchmark size " +
                                                 std::to_string(mixed.size()));
  }
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw Error(ErrorKind::kInvalidArgument, "lambda must be a nonnegative real");
  }
  if (!(config.tau >= 0.0 && config.tau <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "tau must lie in [0, 1]");
  for (double x : xi) {
    if (!std::isfinite(x) || x < 0.0) throw Error(ErrorKind::kInvalidArgument, "difficulty scores must be finite and nonnegative");
  }

  std::vector<const EmbeddingVector*> points;
  points.reserve(mixed.size());
  for (const auto& e : mixed.entries) points.push_back(&store.at(e.entry_id));
  const auto reference = fit_reference(points, config.k_clusters, config.seed);

  const double max_xi = *std::max_element(xi.begin(), xi.end());
  std::vector<double> scaled(xi.begin(), xi.end());
  if (max_xi > 0.0) {
    for (double& s : scaled) s /= max_xi;
  }

  // Weights are shifted by the largest remaining score so the top weight is 1.
  std::vector<bool> live(mixed.size(), true);
  std::vector<double> weight(mixed.size(), 0.0);
  auto reweight = [&] {
    double top = -1.0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (live[i]) top = std::max(top, scaled[i]);
    }
    for (std::size_t i = 0; i < live.size(); ++i) {
      weight[i] = live[i] ? std::exp(config.lambda * (scaled[i] - top)) : 0.0;
    }
  };
  reweight();

  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  // Over-allocation in integer units of 1 / (n * N): cluster c contributes
  // max(0, count_c * N - ref_count_c * n).
  std::vector<std::size_t> counts(reference.k(), 0);
  const std::uint64_t big_n = reference.labels.size();
  const double scale = static_cast<double>(static_cast<std::uint64_t>(n) * big_n);
  auto overshoot = [&](std::size_t c, std::size_t count) -> std::uint64_t {
    const std::uint64_t have = static_cast<std::uint64_t>(count) * big_n;
    const std::uint64_t allowed = static_cast<std::uint64_t>(reference.counts[c]) * n;
    return have > allowed ? have - allowed : 0;
  };
  std::uint64_t excess = 0;
  std::size_t remaining = mixed.size();

  HardSample result;
  while (result.accepted.size() < n) {
    if (remaining == 0) {
      throw Error(ErrorKind::kInfeasibleSampling,
                  "every remaining entry would push the cluster distance above tau; accepted " +
                      std::to_string(result.accepted.size()) + " of " + std::to_string(n));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < weight.size(); ++i) total += weight[i];
    if (!(total > 1e-300)) {
      reweight();
      continue;
    }
    double target = rng.uniform_real() * total;
    std::size_t pick = weight.size();
    for (std::size_t i = 0; i < weight.size(); ++i) {
      if (weight[i] == 0.0) continue;
      pick = i;
      target -= weight[i];
      if (target < 0.0) break;
    }

    const std::size_t c = reference.labels[pick];
    const std::uint64_t delta = overshoot(c, counts[c] + 1) - overshoot(c, counts[c]);
    if (static_cast<double>(excess + delta) / scale <= config.tau) {
      excess += delta;
      ++counts[c];
      live[pick] = false;
      weight[pick] = 0.0;
      --remaining;
      result.accepted.push_back(pick);
      continue;
    }
    if (++result.rejections > config.rejection_budget()) {
      throw Error(ErrorKind::kInfeasibleSampling, "rejection budget exhausted after accepting " +
                                                      std::to_string(result.accepted.size()) + " of " +
                                                      std::to_string(n));
    }
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (live[i] && reference.labels[i] == c) {
        live[i] = false;
        weight[i] = 0.0;
        --remaining;
      }
    }
  }

  std::vector<std::size_t> order = result.accepted;
  std::sort(order.begin(), order.end());
  auto& subset = result.subset;
  subset.version_id = version_id.empty() ? mixed.version_id + "-hard-" + std::to_string(config.seed) : version_id;
  subset.seed = config.seed;
  subset.fingerprint = mixed.fingerprint;
  subset.config = mixed.config;
  subset.hard = true;
  subset.parent_version_id = mixed.version_id;
  subset.sampler_config = config.to_json();
  subset.sampler_config["k_clusters_fitted"] = reference.k();
  for (auto i : order) {
    subset.entries.push_back(mixed.entries[i]);
    subset.entries.back().difficulty = xi[i];
  }

  result.cluster_distance = count_distance(counts, n, reference.counts, reference.labels.size());
  return result;
}

inline MixedBenchmark sample_hard(const MixedBenchmark& mixed, std::span<const double> xi,
                                  const EmbeddingStore& store, const HardSamplerConfig& config) {
  return sample_hard_detailed(mixed, xi, store, config).subset;
}

}  // namespace benchmix
