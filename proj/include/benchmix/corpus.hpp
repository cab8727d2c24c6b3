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
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "benchmix/error.hpp"
#include "benchmix/io.hpp"

namespace benchmix {

enum class ProblemType { kMultipleChoice, kFreeForm };

constexpr std::string_view to_string(ProblemType type) {
  return type == ProblemType::kMultipleChoice ? "multiple_choice" : "free_form";
}

inline std::optional<ProblemType> parse_problem_type(std::string_view s) {
  if (s == "multiple_choice") return ProblemType::kMultipleChoice;
  if (s == "free_form") return ProblemType::kFreeForm;
  return std::nullopt;
}

/// Number of maximal runs of non-whitespace characters.
inline std::size_t token_count(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

/// Letter for a 0-based option index: 0 -> "A".
inline std::string option_letter(std::size_t index) {
  return std::string(1, static_cast<char>('A' + index));
}

/// 0-based option index for a letter, if it names one of `n_options` options.
inline std::optional<std::size_t> option_index(std::string_view letter, std::size_t n_options) {
  if (letter.size() != 1) return std::nullopt;
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(letter[0])));
  if (c < 'A' || c > 'Z') return std::nullopt;
  const auto index = static_cast<std::size_t>(c - 'A');
  if (index >= n_options) return std::nullopt;
  return index;
}

struct BenchmarkEntry {
  std::string id;
  std::string source;
  ProblemType problem_type = ProblemType::kFreeForm;
  std::string query;
  std::optional<std::string> context;  // never holds an empty string
  std::vector<std::string> options;    // empty unless multiple choice
  std::vector<std::string> golden_answers;
  std::size_t context_token_count = 0;

  bool has_input() const { return context.has_value(); }

  friend bool operator==(const BenchmarkEntry&, const BenchmarkEntry&) = default;
};

struct WildQuery {
  std::string id;
  std::string text;

  friend bool operator==(const WildQuery&, const WildQuery&) = default;
};

/// Immutable collection of benchmark entries addressable by id. Every entry
/// remembers which file it came from.
class BenchmarkPool {
 public:
  BenchmarkPool() = default;

  std::span<const BenchmarkEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const BenchmarkEntry* find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  const BenchmarkEntry& at(std::string_view id) const {
    if (const auto* e = find(id)) return *e;
    throw Error(ErrorKind::kInvalidArgument, "unknown pool entry '" + std::string(id) + "'");
  }

  std::size_t position(std::string_view id) const { return index_.at(std::string(id)); }

  /// File each entry was loaded from, parallel to entries().
  std::span<const std::string> provenance() const { return provenance_; }

  friend bool operator==(const BenchmarkPool& a, const BenchmarkPool& b) {
    return a.entries_ == b.entries_;
  }

 private:
  friend class PoolBuilder;
  std::vector<BenchmarkEntry> entries_;
  std::vector<std::string> provenance_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Accumulates validated entries into a pool, rejecting duplicate ids.
class PoolBuilder {
 public:
  void add(BenchmarkEntry entry, std::string origin) {
    const auto [it, inserted] = pool_.index_.emplace(entry.id, pool_.entries_.size());
    if (!inserted) {
      throw Error(ErrorKind::kDuplicateId,
                  "duplicate entry id '" + entry.id + "' in " + origin +
                      " (first defined in " + pool_.provenance_[it->second] + ")");
    }
    pool_.entries_.push_back(std::move(entry));
    pool_.provenance_.push_back(std::move(origin));
  }

  BenchmarkPool build() && { return std::move(pool_); }

 private:
  BenchmarkPool pool_;
};

namespace detail {

inline std::string normalize_golden_letter(const Json& value, std::size_t n_options,
                                           const RecordLocation& loc) {
  std::optional<std::size_t> index;
  if (value.is_number_integer()) {
    const auto i = value.get<long long>();
    if (i >= 0 && static_cast<std::size_t>(i) < n_options) index = static_cast<std::size_t>(i);
  } else if (value.is_string()) {
    const auto s = std::string(trim(value.get<std::string>()));
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
      const auto i = std::stoull(s);
      if (i < n_options) index = static_cast<std::size_t>(i);
    } else {
      index = option_index(s, n_options);
    }
  }
  if (!index) {
    throw Error(ErrorKind::kInvalidEntry,
                loc.str() + ": golden answer " + value.dump() + " does not name one of " +
                    std::to_string(n_options) + " options");
  }
  return option_letter(*index);
}

}  // namespace detail

/// Parses and validates one pool record.
inline BenchmarkEntry parse_entry(const Json& record, const RecordLocation& loc) {
  static constexpr std::string_view kFields[] = {"id",      "source",  "problem_type",  "query",
                                                 "context", "options", "golden_answers"};
  if (!record.is_object()) throw Error(ErrorKind::kMalformedRecord, loc.str() + ": not an object");
  for (const auto& [key, _] : record.items()) {
    if (std::find(std::begin(kFields), std::end(kFields), key) == std::end(kFields)) {
      throw Error(ErrorKind::kMalformedRecord, loc.str() + ": unknown field '" + key + "'");
    }
  }

  BenchmarkEntry entry;
  entry.id = require_field<std::string>(record, "id", loc);
  if (entry.id.empty()) throw Error(ErrorKind::kMalformedRecord, loc.str() + ": empty id");
  entry.source = require_field<std::string>(record, "source", loc);
  const auto type_name = require_field<std::string>(record, "problem_type", loc);
  const auto type = parse_problem_type(type_name);
  if (!type) {
    throw Error(ErrorKind::kMalformedRecord, loc.str() + ": unknown problem_type '" + type_name + "'");
  }
  entry.problem_type = *type;
  entry.query = require_field<std::string>(record, "query", loc);

  if (const auto it = record.find("context"); it != record.end() && !it->is_null()) {
    auto context = require_field<std::string>(record, "context", loc);
    if (!context.empty()) entry.context = std::move(context);
  }
  if (const auto it = record.find("options"); it != record.end() && !it->is_null()) {
    entry.options = require_field<std::vector<std::string>>(record, "options", loc);
  }

  const auto golds = record.find("golden_answers");
  if (golds == record.end() || !golds->is_array() || golds->empty()) {
    throw Error(ErrorKind::kMalformedRecord, loc.str() + ": golden_answers must be a nonempty array");
  }

  if (entry.problem_type == ProblemType::kMultipleChoice) {
    if (entry.options.size() < 2 || entry.options.size() > 26) {
      throw Error(ErrorKind::kInvalidEntry,
                  loc.str() + ": multiple_choice entry needs between 2 and 26 options");
    }
    for (const auto& g : *golds) {
      entry.golden_answers.push_back(detail::normalize_golden_letter(g, entry.options.size(), loc));
    }
  } else {
    if (!entry.options.empty()) {
      throw Error(ErrorKind::kInvalidEntry, loc.str() + ": free_form entry must not carry options");
    }
    entry.golden_answers = require_field<std::vector<std::string>>(record, "golden_answers", loc);
  }

  entry.context_token_count = entry.context ? token_count(*entry.context) : 0;
  return entry;
}

inline Json to_json(const BenchmarkEntry& entry) {
  Json j;
  j["id"] = entry.id;
  j["source"] = entry.source;
  j["problem_type"] = to_string(entry.problem_type);
  j["query"] = entry.query;
  if (entry.context) j["context"] = *entry.context;
  if (!entry.options.empty()) j["options"] = entry.options;
  j["golden_answers"] = entry.golden_answers;
  return j;
}

/// Loads and validates pool files. Ids must be unique across all files.
inline BenchmarkPool load_pool(std::span<const std::filesystem::path> paths) {
  PoolBuilder builder;
  for (const auto& path : paths) {
    for_each_json_line(path, [&](const Json& record, const RecordLocation& loc) {
      builder.add(parse_entry(record, loc), loc.str());
    });
  }
  return std::move(builder).build();
}

inline BenchmarkPool make_pool(std::vector<BenchmarkEntry> entries) {
  PoolBuilder builder;
  for (auto& e : entries) {
    e.context_token_count = e.context ? token_count(*e.context) : 0;
    builder.add(std::move(e), "<memory>");
  }
  return std::move(builder).build();
}

inline std::string serialize_pool(const BenchmarkPool& pool) {
  std::string out;
  for (const auto& e : pool.entries()) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

/// Detected wild user queries, in file order.
class WildQueryCorpus {
 public:
  WildQueryCorpus() = default;

  explicit WildQueryCorpus(std::vector<WildQuery> queries) : queries_(std::move(queries)) {
    for (std::size_t i = 0; i < queries_.size(); ++i) {
      if (trim(queries_[i].text).empty()) {
        throw Error(ErrorKind::kInvalidEntry, "wild query '" + queries_[i].id + "' has empty text");
      }
      if (!index_.emplace(queries_[i].id, i).second) {
        throw Error(ErrorKind::kDuplicateId, "duplicate wild query id '" + queries_[i].id + "'");
      }
    }
  }

  std::span<const WildQuery> queries() const { return queries_; }
  std::size_t size() const { return queries_.size(); }

  const WildQuery* find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &queries_[it->second];
  }

 private:
  std::vector<WildQuery> queries_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline WildQueryCorpus load_corpus(const std::filesystem::path& path) {
  std::vector<WildQuery> queries;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_json_line(path, [&](const Json& record, const RecordLocation& loc) {
    if (!record.is_object()) throw Error(ErrorKind::kMalformedRecord, loc.str() + ": not an object");
    for (const auto& [key, _] : record.items()) {
      if (key != "id" && key != "text") {
        throw Error(ErrorKind::kMalformedRecord, loc.str() + ": unknown field '" + key + "'");
      }
    }
    WildQuery q{require_field<std::string>(record, "id", loc),
                require_field<std::string>(record, "text", loc)};
    if (trim(q.text).empty()) {
      throw Error(ErrorKind::kInvalidEntry, loc.str() + ": empty query text");
    }
    if (!seen.emplace(q.id, loc.line).second) {
      throw Error(ErrorKind::kDuplicateId, loc.str() + ": duplicate wild query id '" + q.id + "'");
    }
    queries.push_back(std::move(q));
  });
  return WildQueryCorpus(std::move(queries));
}

}  // namespace benchmix
