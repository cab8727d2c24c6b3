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
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "benchmix/cluster.hpp"
#include "benchmix/corpus.hpp"
#include "benchmix/error.hpp"
#include "benchmix/io.hpp"

namespace benchmix {

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::kInvalidArgument, "correlation of sequences with different lengths");
  if (xs.size() < 2) throw Error(ErrorKind::kUndefinedStatistic, "correlation needs at least two points");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::kUndefinedStatistic, "correlation with a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman's rho: Pearson correlation of average-tie ranks.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::kInvalidArgument, "spearman of sequences with different lengths");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rmse = 0.0;
};

/// Ordinary least squares y = slope * x + intercept, with the root mean
/// squared residual.
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::kInvalidArgument, "fit over sequences with different lengths");
  if (xs.size() < 2) throw Error(ErrorKind::kUndefinedStatistic, "linear fit needs at least two points");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorKind::kUndefinedStatistic, "linear fit with constant x");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
    ss += r * r;
  }
  fit.rmse = std::sqrt(ss / n);
  return fit;
}

/// Scores of many models on one benchmark.
struct ScoreTable {
  std::string benchmark_id;
  std::map<std::string, double> scores;  // model id -> score
  std::string source;                    // provenance, may be empty
};

struct ScoreTables {
  std::vector<ScoreTable> tables;
  std::vector<std::string> warnings;

  const ScoreTable& at(const std::string& benchmark) const {
    for (const auto& t : tables) {
      if (t.benchmark_id == benchmark) return t;
    }
    throw Error(ErrorKind::kInvalidArgument, "no score column named '" + benchmark + "'");
  }
};

inline std::optional<double> parse_score_cell(const std::string& raw, const RecordLocation& loc) {
  const auto cell = std::string(trim(raw));
  if (cell.empty() || cell == "-") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kMalformedRecord, loc.str() + ": bad score '" + cell + "'");
}

/// Comma-separated grid: a `model_id` column, then one column per benchmark.
/// Blank and "-" cells mean "not evaluated". An optional row whose model_id is
/// `@source` records where each column's scores came from; columns without a
/// single source, or with author-reported scores, produce warnings.
inline ScoreTables load_score_tables(const std::filesystem::path& path) {
  const auto rows = csv::read_rows(path);
  if (rows.empty()) throw Error(ErrorKind::kMalformedRecord, path.string() + ": empty score table");
  const auto& header = rows.front().first;
  if (header.empty() || trim(header[0]) != "model_id") {
    throw Error(ErrorKind::kMalformedRecord, rows.front().second.str() + ": first column must be model_id");
  }
  ScoreTables out;
  for (std::size_t c = 1; c < header.size(); ++c) out.tables.push_back({std::string(trim(header[c])), {}, {}});
  bool have_sources = false;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [fields, loc] = rows[r];
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::kMalformedRecord, loc.str() + ": expected " + std::to_string(header.size()) + " fields");
    }
    const auto model = std::string(trim(fields[0]));
    if (model == "@source") {
      have_sources = true;
      for (std::size_t c = 1; c < fields.size(); ++c) out.tables[c - 1].source = std::string(trim(fields[c]));
      continue;
    }
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (const auto v = parse_score_cell(fields[c], loc)) {
        if (!out.tables[c - 1].scores.emplace(model, *v).second) {
          throw Error(ErrorKind::kDuplicateId, loc.str() + ": duplicate model '" + model + "'");
        }
      }
    }
  }
  if (have_sources) {
    for (const auto& t : out.tables) {
      if (t.source.empty()) {
        out.warnings.push_back("benchmark '" + t.benchmark_id + "' has no recorded score source");
      } else if (t.source.find(';') != std::string::npos) {
        out.warnings.push_back("benchmark '" + t.benchmark_id + "' mixes scores from several sources");
      } else if (t.source.find("author") != std::string::npos) {
        out.warnings.push_back("benchmark '" + t.benchmark_id + "' uses author-reported scores");
      }
    }
  }
  return out;
}

struct CorrelationCell {
  std::string benchmark_a;
  std::string benchmark_b;
  std::optional<double> rho;  // empty when undefined
  std::size_t n_common_models = 0;
  bool insufficient = false;  // n_common_models < min_models
};

struct CorrelationMatrix {
  std::vector<std::string> benchmarks;
  std::vector<CorrelationCell> cells;  // row-major, benchmarks.size()^2
  std::size_t min_models = 15;

  const CorrelationCell& at(std::size_t i, std::size_t j) const { return cells[i * benchmarks.size() + j]; }

  const CorrelationCell& at(const std::string& a, const std::string& b) const {
    const auto ia = std::find(benchmarks.begin(), benchmarks.end(), a);
    const auto ib = std::find(benchmarks.begin(), benchmarks.end(), b);
    if (ia == benchmarks.end() || ib == benchmarks.end()) {
      throw Error(ErrorKind::kInvalidArgument, "no correlation cell for '" + a + "' x '" + b + "'");
    }
    return at(static_cast<std::size_t>(ia - benchmarks.begin()), static_cast<std::size_t>(ib - benchmarks.begin()));
  }
};

/// Common models of two tables, with paired scores in model-id order.
inline std::size_t common_scores(const ScoreTable& a, const ScoreTable& b, std::vector<double>& xs,
                                 std::vector<double>& ys) {
  xs.clear();
  ys.clear();
  for (const auto& [model, score] : a.scores) {
    if (const auto it = b.scores.find(model); it != b.scores.end()) {
      xs.push_back(score);
      ys.push_back(it->second);
    }
  }
  return xs.size();
}

/// Pairwise Spearman correlations over common models. Pairs with fewer than
/// two common models (or a constant side) are undefined; pairs with fewer
/// than `min_models` are flagged insufficient.
inline CorrelationMatrix correlation_matrix(std::span<const ScoreTable> tables, std::size_t min_models = 15) {
  if (tables.size() < 2) throw Error(ErrorKind::kInvalidArgument, "correlation matrix needs at least two benchmarks");
  CorrelationMatrix m;
  m.min_models = min_models;
  const std::size_t n = tables.size();
  for (const auto& t : tables) m.benchmarks.push_back(t.benchmark_id);
  m.cells.resize(n * n);
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      CorrelationCell cell;
      cell.benchmark_a = tables[i].benchmark_id;
      cell.benchmark_b = tables[j].benchmark_id;
      cell.n_common_models = common_scores(tables[i], tables[j], xs, ys);
      if (i == j) {
        cell.rho = 1.0;
      } else if (cell.n_common_models >= 2) {
        try {
          cell.rho = spearman(xs, ys);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kUndefinedStatistic) throw;
        }
      }
      cell.insufficient = cell.n_common_models < min_models;
      m.cells[i * n + j] = cell;
      std::swap(cell.benchmark_a, cell.benchmark_b);
      m.cells[j * n + i] = std::move(cell);
    }
  }
  return m;
}

/// Rho grid; undefined cells are blank. `percent` renders rho * 100.
inline std::string matrix_csv(const CorrelationMatrix& m, bool percent = false) {
  std::vector<std::string> row{"benchmark"};
  row.insert(row.end(), m.benchmarks.begin(), m.benchmarks.end());
  std::string out = csv::join_row(row) + "\n";
  for (std::size_t i = 0; i < m.benchmarks.size(); ++i) {
    row.assign(1, m.benchmarks[i]);
    for (std::size_t j = 0; j < m.benchmarks.size(); ++j) {
      const auto& rho = m.at(i, j).rho;
      row.push_back(rho ? format_real(percent ? 100.0 * *rho : *rho) : "");
    }
    out += csv::join_row(row) + "\n";
  }
  return out;
}

/// Number of common models per pair.
inline std::string n_common_csv(const CorrelationMatrix& m) {
  std::vector<std::string> row{"benchmark"};
  row.insert(row.end(), m.benchmarks.begin(), m.benchmarks.end());
  std::string out = csv::join_row(row) + "\n";
  for (std::size_t i = 0; i < m.benchmarks.size(); ++i) {
    row.assign(1, m.benchmarks[i]);
    for (std::size_t j = 0; j < m.benchmarks.size(); ++j) row.push_back(std::to_string(m.at(i, j).n_common_models));
    out += csv::join_row(row) + "\n";
  }
  return out;
}

/// Cluster distance of `set_a` against a k-means partition fitted on `set_b`.
inline double corpus_cluster_distance(PointSet set_a, PointSet set_b, std::size_t k, std::uint64_t seed) {
  if (set_a.empty() || set_b.empty()) throw Error(ErrorKind::kInvalidArgument, "cluster distance of an empty set");
  return cluster_distance(set_a, fit_reference(set_b, k, seed));
}

}  // namespace benchmix
