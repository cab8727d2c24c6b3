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
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "benchmix/corpus.hpp"
#include "benchmix/embedding.hpp"
#include "benchmix/error.hpp"
#include "benchmix/io.hpp"
#include "benchmix/parallel.hpp"
#include "benchmix/rng.hpp"

namespace benchmix {

enum class EmbedField { kQueryOnly, kContextPlusQuery };

constexpr std::string_view to_string(EmbedField f) {
  return f == EmbedField::kQueryOnly ? "query_only" : "context_plus_query";
}

/// Text sent to the embedding provider for a pool entry.
inline std::string embedding_text(const BenchmarkEntry& entry, EmbedField field) {
  if (field == EmbedField::kContextPlusQuery && entry.context) return *entry.context + "\n" + entry.query;
  return entry.query;
}

struct MixtureConfig {
  std::size_t theta_max_input_tokens = 1000;
  std::size_t n_queries = 4000;
  std::uint64_t seed = 0;
  bool allow_duplicate_entries = false;
  EmbedField embed_field = EmbedField::kQueryOnly;

  Json to_json() const {
    Json j;
    j["theta_max_input_tokens"] = theta_max_input_tokens;
    j["n_queries"] = n_queries;
    j["seed"] = seed;
    j["allow_duplicate_entries"] = allow_duplicate_entries;
    j["embed_field"] = to_string(embed_field);
    return j;
  }

  /// Reads the fields present in `j`, keeping defaults for the rest.
  static MixtureConfig from_json(const Json& j) {
    MixtureConfig c;
    try {
      c.theta_max_input_tokens = j.value("theta_max_input_tokens", c.theta_max_input_tokens);
      c.n_queries = j.value("n_queries", c.n_queries);
      c.seed = j.value("seed", c.seed);
      c.allow_duplicate_entries = j.value("allow_duplicate_entries", c.allow_duplicate_entries);
      const auto field = j.value("embed_field", std::string(to_string(c.embed_field)));
      if (field == "query_only") {
        c.embed_field = EmbedField::kQueryOnly;
      } else if (field == "context_plus_query") {
        c.embed_field = EmbedField::kContextPlusQuery;
      } else {
        throw Error(ErrorKind::kInvalidArgument, "unknown embed_field '" + field + "'");
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::kInvalidArgument, std::string("bad mixture config: ") + e.what());
    }
    return c;
  }

  friend bool operator==(const MixtureConfig&, const MixtureConfig&) = default;
};

struct MixedEntry {
  std::string wild_query_id;
  std::string entry_id;
  std::string source;
  double similarity = 0.0;
  std::optional<double> difficulty;  // set on hard subsets

  friend bool operator==(const MixedEntry&, const MixedEntry&) = default;
};

/// Result of the mixture mapping, or of a hard subset drawn from one.
struct MixedBenchmark {
  std::string version_id;
  std::uint64_t seed = 0;
  std::string fingerprint;
  MixtureConfig config;
  std::vector<MixedEntry> entries;

  bool hard = false;
  std::string parent_version_id;  // hard subsets only
  Json sampler_config;            // hard subsets only
  std::string created;            // optional timestamp stamped by versioning

  std::size_t size() const { return entries.size(); }

  friend bool operator==(const MixedBenchmark&, const MixedBenchmark&) = default;
};

inline std::string serialize_mixed(const MixedBenchmark& mb) {
  Json header;
  header["version_id"] = mb.version_id;
  header["seed"] = mb.seed;
  header["fingerprint"] = mb.fingerprint;
  header["hard"] = mb.hard;
  if (!mb.created.empty()) header["created"] = mb.created;
  header["config_snapshot"] = mb.config.to_json();
  if (mb.hard) {
    header["parent_version_id"] = mb.parent_version_id;
    header["sampler_config"] = mb.sampler_config;
  }
  header["n_entries"] = mb.entries.size();
  std::string out = header.dump() + "\n";
  for (const auto& e : mb.entries) {
    Json rec;
    rec["wild_query_id"] = e.wild_query_id;
    rec["entry_id"] = e.entry_id;
    rec["source"] = e.source;
    rec["similarity"] = e.similarity;
    if (e.difficulty) rec["xi"] = *e.difficulty;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

inline MixedBenchmark load_mixed(const std::filesystem::path& path) {
  MixedBenchmark mb;
  bool have_header = false;
  std::size_t declared = 0;
  for_each_json_line(path, [&](const Json& rec, const RecordLocation& loc) {
    if (!have_header) {
      have_header = true;
      mb.version_id = require_field<std::string>(rec, "version_id", loc);
      mb.seed = require_field<std::uint64_t>(rec, "seed", loc);
      mb.fingerprint = require_field<std::string>(rec, "fingerprint", loc);
      mb.hard = rec.value("hard", false);
      mb.created = rec.value("created", std::string());
      mb.config = MixtureConfig::from_json(require_field<Json>(rec, "config_snapshot", loc));
      if (mb.hard) {
        mb.parent_version_id = rec.value("parent_version_id", std::string());
        mb.sampler_config = rec.value("sampler_config", Json::object());
      }
      declared = require_field<std::size_t>(rec, "n_entries", loc);
      return;
    }
    MixedEntry e;
    e.wild_query_id = require_field<std::string>(rec, "wild_query_id", loc);
    e.entry_id = require_field<std::string>(rec, "entry_id", loc);
    e.source = require_field<std::string>(rec, "source", loc);
    e.similarity = require_field<double>(rec, "similarity", loc);
    if (!(e.similarity >= -1.0 && e.similarity <= 1.0)) {
      throw Error(ErrorKind::kMalformedRecord, loc.str() + ": similarity outside [-1, 1]");
    }
    if (rec.contains("xi")) e.difficulty = require_field<double>(rec, "xi", loc);
    mb.entries.push_back(std::move(e));
  });
  if (!have_header) throw Error(ErrorKind::kMalformedRecord, path.string() + ": missing header");
  if (declared != mb.entries.size()) {
    throw Error(ErrorKind::kMalformedRecord, path.string() + ": header declares " + std::to_string(declared) +
                                                 " entries, file has " + std::to_string(mb.entries.size()));
  }
  return mb;
}

/// Checks that every selection resolves in `pool` with a matching source.
inline void validate_against(const MixedBenchmark& mb, const BenchmarkPool& pool) {
  for (const auto& e : mb.entries) {
    const auto* entry = pool.find(e.entry_id);
    if (!entry) throw Error(ErrorKind::kInvalidEntry, "mixed entry '" + e.entry_id + "' is not in the pool");
    if (entry->source != e.source) {
      throw Error(ErrorKind::kInvalidEntry, "mixed entry '" + e.entry_id + "' has source '" + e.source +
                                                "', pool says '" + entry->source + "'");
    }
  }
}

namespace detail {

struct Candidate {
  double similarity;
  std::size_t rank;  // position among eligible entries sorted by id

  bool better_than(const Candidate& o) const {
    return similarity > o.similarity || (similarity == o.similarity && rank < o.rank);
  }
};

// Best `k` candidates for one query, best first.
inline std::vector<Candidate> top_candidates(const EmbeddingVector& query,
                                             std::span<const EmbeddingVector* const> eligible,
                                             std::size_t k, const std::vector<bool>* skip = nullptr) {
  std::vector<Candidate> top;
  top.reserve(k + 1);
  for (std::size_t j = 0; j < eligible.size(); ++j) {
    if (skip && (*skip)[j]) continue;
    const Candidate c{similarity(query, *eligible[j]), j};
    if (top.size() == k && !c.better_than(top.back())) continue;
    auto pos = top.end();
    while (pos != top.begin() && c.better_than(*(pos - 1))) --pos;
    top.insert(pos, c);
    if (top.size() > k) top.pop_back();
  }
  return top;
}

}  // namespace detail

struct MixOptions {
  std::size_t workers = default_concurrency();
  std::string version_id;  // defaults to "mix-<seed>"
};

/// Maps each sampled wild query to its most similar pool entry whose input
/// has at most theta tokens.
///
/// Queries are drawn uniformly without replacement with the configured seed
/// and processed in corpus order. Similarity ties go to the lexicographically
/// smallest entry id. When duplicates are disallowed, selection is a greedy
/// pass in query order: an entry already taken by an earlier query is
/// skipped in favor of the next-best eligible one.
inline MixedBenchmark mix(const WildQueryCorpus& corpus, const BenchmarkPool& pool,
                          const EmbeddingStore& store, const MixtureConfig& config,
                          const MixOptions& options = {}) {
  if (config.theta_max_input_tokens == 0) throw Error(ErrorKind::kInvalidArgument, "theta must be positive");
  if (config.n_queries == 0) throw Error(ErrorKind::kInvalidArgument, "n_queries must be positive");
  if (config.n_queries > corpus.size()) {
    throw Error(ErrorKind::kInvalidArgument, "n_queries " + std::to_string(config.n_queries) +
                                                 " exceeds corpus size " + std::to_string(corpus.size()));
  }

  std::vector<const BenchmarkEntry*> eligible;
  for (const auto& e : pool.entries()) {
    if (e.context_token_count <= config.theta_max_input_tokens) eligible.push_back(&e);
  }
  if (eligible.empty()) throw Error(ErrorKind::kNoEligibleEntry, "no pool entry satisfies the input-length constraint");
  std::sort(eligible.begin(), eligible.end(),
            [](const BenchmarkEntry* a, const BenchmarkEntry* b) { return a->id < b->id; });
  std::vector<const EmbeddingVector*> eligible_vecs;
  eligible_vecs.reserve(eligible.size());
  for (const auto* e : eligible) eligible_vecs.push_back(&store.at(e->id));

  const auto positions = sample_without_replacement(corpus.size(), config.n_queries, config.seed);
  const auto queries = corpus.queries();
  std::vector<const EmbeddingVector*> query_vecs;
  query_vecs.reserve(positions.size());
  for (auto p : positions) query_vecs.push_back(&store.at(queries[p].id));

  const std::size_t k = config.allow_duplicate_entries ? 1 : std::min<std::size_t>(8, eligible.size());
  std::vector<std::vector<detail::Candidate>> candidates(positions.size());
  parallel_for(positions.size(), options.workers, [&](std::size_t i) {
    candidates[i] = detail::top_candidates(*query_vecs[i], eligible_vecs, k);
  });

  MixedBenchmark mb;
  mb.seed = config.seed;
  mb.version_id = options.version_id.empty() ? "mix-" + std::to_string(config.seed) : options.version_id;
  mb.fingerprint = store.fingerprint();
  mb.config = config;
  mb.entries.reserve(positions.size());

  std::vector<bool> taken(eligible.size(), false);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    std::optional<detail::Candidate> pick;
    for (const auto& c : candidates[i]) {
      if (config.allow_duplicate_entries || !taken[c.rank]) {
        pick = c;
        break;
      }
    }
    if (!pick) {
      // Every precomputed candidate was taken; rescan the remaining entries.
      const auto rest = detail::top_candidates(*query_vecs[i], eligible_vecs, 1, &taken);
      if (rest.empty()) {
        throw Error(ErrorKind::kNoEligibleEntry,
                    "no untaken eligible entry left for wild query '" + queries[positions[i]].id + "'");
      }
      pick = rest.front();
    }
    taken[pick->rank] = true;
    const auto* entry = eligible[pick->rank];
    mb.entries.push_back({queries[positions[i]].id, entry->id, entry->source, pick->similarity, std::nullopt});
  }
  return mb;
}

struct SplitShare {
  std::size_t count = 0;
  double fraction = 0.0;
};

/// Per-source counts and normalized fractions, keyed by source name.
inline std::map<std::string, SplitShare> split_histogram(const MixedBenchmark& mb) {
  std::map<std::string, SplitShare> out;
  for (const auto& e : mb.entries) ++out[e.source].count;
  for (auto& [_, s] : out) s.fraction = static_cast<double>(s.count) / static_cast<double>(mb.entries.size());
  return out;
}

/// Key statistics of a mixed benchmark: query count, token lengths of the
/// queries, and how many entries carry an input (context) field.
struct BenchmarkStatistics {
  std::size_t n_queries = 0;
  double mean_query_tokens = 0.0;
  double mean_inputs = 0.0;  // inputs per query
  double mean_input_tokens = 0.0;
  std::size_t min_input_tokens = 0;
  std::size_t max_input_tokens = 0;
  std::size_t n_with_input = 0;

  Json to_json() const {
    Json j;
    j["n_queries"] = n_queries;
    j["mean_query_tokens"] = mean_query_tokens;
    j["mean_inputs"] = mean_inputs;
    j["mean_input_tokens"] = mean_input_tokens;
    j["min_input_tokens"] = min_input_tokens;
    j["max_input_tokens"] = max_input_tokens;
    j["n_with_input"] = n_with_input;
    return j;
  }
};

inline BenchmarkStatistics benchmark_statistics(const MixedBenchmark& mb, const BenchmarkPool& pool) {
  BenchmarkStatistics s;
  s.n_queries = mb.entries.size();
  if (mb.entries.empty()) return s;
  double query_tokens = 0.0;
  double input_tokens = 0.0;
  s.min_input_tokens = std::numeric_limits<std::size_t>::max();
  for (const auto& me : mb.entries) {
    const auto& e = pool.at(me.entry_id);
    query_tokens += static_cast<double>(token_count(e.query));
    if (e.has_input()) {
      ++s.n_with_input;
      input_tokens += static_cast<double>(e.context_token_count);
      s.min_input_tokens = std::min(s.min_input_tokens, e.context_token_count);
      s.max_input_tokens = std::max(s.max_input_tokens, e.context_token_count);
    }
  }
  const auto n = static_cast<double>(s.n_queries);
  s.mean_query_tokens = query_tokens / n;
  s.mean_inputs = static_cast<double>(s.n_with_input) / n;
  if (s.n_with_input) {
    s.mean_input_tokens = input_tokens / static_cast<double>(s.n_with_input);
  } else {
    s.min_input_tokens = 0;
  }
  return s;
}

}  // namespace benchmix
