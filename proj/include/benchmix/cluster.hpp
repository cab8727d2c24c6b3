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
#include <limits>
#include <span>
#include <vector>

#include "benchmix/embedding.hpp"
#include "benchmix/error.hpp"
#include "benchmix/rng.hpp"

namespace benchmix {

using PointSet = std::span<const EmbeddingVector* const>;

inline std::vector<const EmbeddingVector*> as_points(std::span<const EmbeddingVector> vectors) {
  std::vector<const EmbeddingVector*> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(&v);
  return out;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

/// Centroids of a fitted k-means partition.
struct KMeansModel {
  std::vector<std::vector<double>> centroids;

  std::size_t k() const { return centroids.size(); }

  /// Nearest centroid by squared Euclidean distance; ties go to the lower index.
  std::size_t assign(std::span<const double> point) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(point, centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  }
};

/// Seeded k-means++ initialization followed by Lloyd iterations until the
/// assignment is stable or `max_iterations` is reached. k is clamped to the
/// number of points.
inline KMeansModel fit_kmeans(PointSet points, std::size_t k, std::uint64_t seed,
                              std::size_t max_iterations = 100) {
  if (points.empty()) throw Error(ErrorKind::kInvalidArgument, "k-means on an empty set");
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "k-means with k = 0");
  k = std::min(k, points.size());
  const std::size_t dim = points.front()->dimension();
  for (const auto* p : points) {
    if (p->dimension() != dim) throw Error(ErrorKind::kDimensionMismatch, "mixed dimensions in k-means input");
  }

  Rng rng(seed);
  KMeansModel model;
  const auto first = rng.uniform_index(points.size());
  model.centroids.emplace_back(points[first]->values().begin(), points[first]->values().end());

  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  while (model.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i]->values(), model.centroids.back()));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform_real() * total;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        target -= nearest[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      // All points coincide with existing centroids.
      pick = rng.uniform_index(points.size());
    }
    model.centroids.emplace_back(points[pick]->values().begin(), points[pick]->values().end());
  }

  std::vector<std::size_t> assignment(points.size(), k);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = model.assign(points[i]->values());
      if (c != assignment[i]) {
        assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto v = points[i]->values();
      auto& s = sums[assignment[i]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += v[d];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d) model.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }
  return model;
}

/// Normalized occupancy histogram of cluster labels in [0, k).
inline std::vector<double> occupancy_histogram(std::span<const std::size_t> labels, std::size_t k) {
  std::vector<double> h(k, 0.0);
  if (labels.empty()) return h;
  for (auto l : labels) h.at(l) += 1.0;
  for (double& v : h) v /= static_cast<double>(labels.size());
  return h;
}

/// Half the L1 distance between two distributions over the same support.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorKind::kDimensionMismatch, "histograms over different supports");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

/// A k-means partition fitted on a reference set, with the reference set's
/// own labels and occupancy histogram.
struct ReferenceClustering {
  KMeansModel model;
  std::vector<std::size_t> labels;
  std::vector<double> histogram;
  std::vector<std::size_t> counts;  // histogram before dividing by labels.size()

  std::size_t k() const { return model.k(); }

  std::vector<std::size_t> label(PointSet points) const {
    std::vector<std::size_t> out;
    out.reserve(points.size());
    for (const auto* p : points) out.push_back(model.assign(p->values()));
    return out;
  }
};

inline ReferenceClustering fit_reference(PointSet reference, std::size_t k, std::uint64_t seed) {
  ReferenceClustering rc;
  rc.model = fit_kmeans(reference, k, seed);
  rc.labels = rc.label(reference);
  rc.histogram = occupancy_histogram(rc.labels, rc.k());
  rc.counts.assign(rc.k(), 0);
  for (auto l : rc.labels) ++rc.counts[l];
  return rc;
}

/// Twice the total-variation distance between two occupancy histograms given
/// as counts, scaled by n_a * n_b so it is an exact integer.
inline std::uint64_t scaled_variation(std::span<const std::size_t> a, std::size_t n_a, std::span<const std::size_t> b,
                                      std::size_t n_b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kDimensionMismatch, "histograms over different supports");
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::uint64_t x = static_cast<std::uint64_t>(a[i]) * n_b;
    const std::uint64_t y = static_cast<std::uint64_t>(b[i]) * n_a;
    sum += x > y ? x - y : y - x;
  }
  return sum;
}

/// Total-variation distance between count histograms as one correctly
/// rounded division, so equal distances compare equal however they were
/// accumulated.
inline double count_distance(std::span<const std::size_t> a, std::size_t n_a, std::span<const std::size_t> b,
                             std::size_t n_b) {
  const auto scale = 2 * static_cast<std::uint64_t>(n_a) * n_b;
  return static_cast<double>(scaled_variation(a, n_a, b, n_b)) / static_cast<double>(scale);
}

/// Total-variation distance between the sample's cluster-occupancy histogram
/// and the reference's, in [0, 1].
inline double cluster_distance(PointSet sample, const ReferenceClustering& reference) {
  if (sample.empty()) throw Error(ErrorKind::kInvalidArgument, "cluster distance of an empty sample");
  std::vector<std::size_t> counts(reference.k(), 0);
  for (auto l : reference.label(sample)) ++counts[l];
  return count_distance(counts, sample.size(), reference.counts, reference.labels.size());
}

}  // namespace benchmix
