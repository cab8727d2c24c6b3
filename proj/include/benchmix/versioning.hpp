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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "benchmix/corpus.hpp"
#include "benchmix/embedding.hpp"
#include "benchmix/error.hpp"
#include "benchmix/io.hpp"
#include "benchmix/mixture.hpp"

namespace benchmix {

using IdSet = std::unordered_set<std::string>;

/// Share of the union that belongs to exactly one side:
/// (|A \ B| + |B \ A|) / |A u B|, i.e. one minus the Jaccard similarity.
inline double unique_ratio(const IdSet& a, const IdSet& b) {
  if (a.empty() && b.empty()) throw Error(ErrorKind::kUndefinedStatistic, "unique ratio of two empty sets");
  std::size_t a_only = 0;
  for (const auto& x : a) a_only += b.count(x) ? 0 : 1;
  std::size_t b_only = 0;
  for (const auto& x : b) b_only += a.count(x) ? 0 : 1;
  const std::size_t common = a.size() - a_only;
  return static_cast<double>(a_only + b_only) / static_cast<double>(a_only + b_only + common);
}

inline IdSet wild_query_ids(const MixedBenchmark& mb) {
  IdSet s;
  for (const auto& e : mb.entries) s.insert(e.wild_query_id);
  return s;
}

inline IdSet entry_ids(const MixedBenchmark& mb) {
  IdSet s;
  for (const auto& e : mb.entries) s.insert(e.entry_id);
  return s;
}

/// Version id encoding the seed and creation time, e.g. "v-7-20261018T120000Z".
inline std::string make_version_id(std::uint64_t seed, const std::string& timestamp) {
  std::string compact;
  for (char c : timestamp) {
    if (c != '-' && c != ':') compact += c;
  }
  return "v-" + std::to_string(seed) + (compact.empty() ? "" : "-" + compact);
}

/// A fresh benchmark version: the mixture re-run with `config.seed`, stamped
/// with a version id recording seed and timestamp. Content depends only on the
/// inputs and the seed.
inline MixedBenchmark new_version(const WildQueryCorpus& corpus, const BenchmarkPool& pool,
                                  const EmbeddingStore& store, const MixtureConfig& config,
                                  const std::string& timestamp, const MixOptions& options = {}) {
  MixOptions opts = options;
  opts.version_id = make_version_id(config.seed, timestamp);
  auto mb = mix(corpus, pool, store, config, opts);
  mb.created = timestamp;
  return mb;
}

struct VersionPair {
  std::string version_a;
  std::string version_b;
  double unique_web_query_ratio = 0.0;
  double unique_entry_ratio = 0.0;
};

struct ModelStability {
  std::string model_id;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across versions
};

struct VersionReport {
  std::vector<VersionPair> version_pairs;
  std::vector<ModelStability> per_model_stats;
  double mean_unique_web_query_ratio = 0.0;
  double mean_unique_entry_ratio = 0.0;
  double grand_mean = 0.0;  // mean of per-model means
  double grand_std = 0.0;   // mean of per-model stds
};

/// Unique-ratio statistics for every unordered pair of versions.
inline VersionReport compare_versions(std::span<const MixedBenchmark> versions) {
  VersionReport report;
  std::vector<IdSet> queries;
  std::vector<IdSet> entries;
  for (const auto& v : versions) {
    queries.push_back(wild_query_ids(v));
    entries.push_back(entry_ids(v));
  }
  double sum_q = 0.0;
  double sum_e = 0.0;
  for (std::size_t a = 0; a < versions.size(); ++a) {
    for (std::size_t b = a + 1; b < versions.size(); ++b) {
      VersionPair p{versions[a].version_id, versions[b].version_id, unique_ratio(queries[a], queries[b]),
                    unique_ratio(entries[a], entries[b])};
      sum_q += p.unique_web_query_ratio;
      sum_e += p.unique_entry_ratio;
      report.version_pairs.push_back(std::move(p));
    }
  }
  if (!report.version_pairs.empty()) {
    report.mean_unique_web_query_ratio = sum_q / static_cast<double>(report.version_pairs.size());
    report.mean_unique_entry_ratio = sum_e / static_cast<double>(report.version_pairs.size());
  }
  return report;
}

using VersionScores = std::map<std::string, std::map<std::string, double>>;  // version -> model -> score

/// Per-model mean and population std of scores across versions, plus their
/// averages. Every model must be scored in every version.
inline VersionReport stability_report(const VersionScores& scores) {
  VersionReport report;
  if (scores.empty()) throw Error(ErrorKind::kInvalidArgument, "stability report needs at least one version");
  std::set<std::string> models;
  for (const auto& [_, by_model] : scores) {
    for (const auto& [m, _s] : by_model) models.insert(m);
  }
  const auto n = static_cast<double>(scores.size());
  double sum_mean = 0.0;
  double sum_std = 0.0;
  for (const auto& m : models) {
    std::vector<double> values;
    for (const auto& [version, by_model] : scores) {
      const auto it = by_model.find(m);
      if (it == by_model.end()) {
        throw Error(ErrorKind::kInvalidArgument, "model '" + m + "' has no score in version '" + version + "'");
      }
      values.push_back(it->second);
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    report.per_model_stats.push_back({m, mean, sd});
    sum_mean += mean;
    sum_std += sd;
  }
  report.grand_mean = sum_mean / static_cast<double>(models.size());
  report.grand_std = sum_std / static_cast<double>(models.size());
  return report;
}

/// Reads `version_id,model_id,score` rows (header required).
inline VersionScores load_version_scores(const std::filesystem::path& path) {
  const auto rows = csv::read_rows(path);
  if (rows.empty()) throw Error(ErrorKind::kMalformedRecord, path.string() + ": empty score file");
  const auto& header = rows.front().first;
  if (header.size() != 3 || header[0] != "version_id" || header[1] != "model_id" || header[2] != "score") {
    throw Error(ErrorKind::kMalformedRecord, rows.front().second.str() + ": expected header version_id,model_id,score");
  }
  VersionScores out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [fields, loc] = rows[r];
    if (fields.size() != 3) throw Error(ErrorKind::kMalformedRecord, loc.str() + ": expected 3 fields");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorKind::kMalformedRecord, loc.str() + ": bad score '" + fields[2] + "'");
    }
    if (!out[fields[0]].emplace(fields[1], v).second) {
      throw Error(ErrorKind::kDuplicateId, loc.str() + ": duplicate score for " + fields[0] + "/" + fields[1]);
    }
  }
  return out;
}

inline std::string pairs_csv(const VersionReport& r) {
  std::string out = "version_a,version_b,unique_web_query_ratio,unique_entry_ratio\n";
  for (const auto& p : r.version_pairs) {
    out += csv::join_row({p.version_a, p.version_b, format_real(p.unique_web_query_ratio),
                          format_real(p.unique_entry_ratio)});
    out += '\n';
  }
  out += csv::join_row({"mean", "", format_real(r.mean_unique_web_query_ratio), format_real(r.mean_unique_entry_ratio)});
  out += '\n';
  return out;
}

inline std::string stability_csv(const VersionReport& r) {
  std::string out = "model_id,mean,std\n";
  for (const auto& s : r.per_model_stats) {
    out += csv::join_row({s.model_id, format_real(s.mean), format_real(s.std)});
    out += '\n';
  }
  out += csv::join_row({"average", format_real(r.grand_mean), format_real(r.grand_std)});
  out += '\n';
  return out;
}

/// Directory of serialized versions plus an append-only `index.jsonl` listing
/// each version's seed and config. Existing versions are never replaced.
class VersionRegistry {
 public:
  explicit VersionRegistry(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path path_for(const std::string& version_id) const {
    return root_ / "versions" / (version_id + ".jsonl");
  }

  void add(const MixedBenchmark& mb) {
    write_new_file(path_for(mb.version_id), serialize_mixed(mb));
    Json line;
    line["version_id"] = mb.version_id;
    line["seed"] = mb.seed;
    line["created"] = mb.created;
    line["fingerprint"] = mb.fingerprint;
    line["config"] = mb.config.to_json();
    std::filesystem::create_directories(root_);
    std::ofstream index(root_ / "index.jsonl", std::ios::app | std::ios::binary);
    if (!index) throw Error(ErrorKind::kIo, "cannot append to " + (root_ / "index.jsonl").string());
    index << line.dump() << '\n';
  }

  std::vector<std::string> version_ids() const {
    std::vector<std::string> ids;
    const auto index = root_ / "index.jsonl";
    if (!std::filesystem::exists(index)) return ids;
    for_each_json_line(index, [&](const Json& rec, const RecordLocation& loc) {
      ids.push_back(require_field<std::string>(rec, "version_id", loc));
    });
    return ids;
  }

  MixedBenchmark load(const std::string& version_id) const { return load_mixed(path_for(version_id)); }

 private:
  std::filesystem::path root_;
};

}  // namespace benchmix
