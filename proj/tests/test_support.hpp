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

// Generators and reference implementations shared by the unit and acceptance
// tests. Oracles here are written independently of the library code paths
// they check: plain loops, std distributions, and Boost.Math.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/hypergeometric.hpp>

#include "benchmix/corpus.hpp"
#include "benchmix/embedding.hpp"
#include "benchmix/hardset.hpp"
#include "benchmix/mixture.hpp"
#include "httplib.h"

namespace benchmix::testing {

namespace fs = std::filesystem;

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("benchmix-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<double> gaussian_vector(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = normal(gen);
  return v;
}

inline std::string words(std::mt19937_64& gen, std::size_t n) {
  static const char* kWords[] = {"alpha", "beta", "gamma", "delta", "river", "stone", "cloud", "seven"};
  std::uniform_int_distribution<std::size_t> pick(0, 7);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += kWords[pick(gen)];
  }
  return out;
}

inline std::string padded_id(const char* prefix, std::size_t i, int width = 6) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

/// A synthetic pool, wild-query corpus, and embedding store sharing one
/// dimension. Some pool vectors are exact copies of others to create ties,
/// and contexts vary in length around `theta`.
struct ToyInstance {
  BenchmarkPool pool;
  WildQueryCorpus corpus;
  EmbeddingStore store{1, "toy/1"};
  std::size_t theta = 0;
};

struct ToyShape {
  std::size_t n_pool = 100;
  std::size_t n_queries = 30;
  std::size_t dim = 8;
  std::size_t theta = 20;
  double tie_rate = 0.1;
  std::size_t n_sources = 4;
};

inline ToyInstance make_toy(std::uint64_t seed, const ToyShape& shape) {
  std::mt19937_64 gen(seed);
  ToyInstance toy;
  toy.theta = shape.theta;
  toy.store = EmbeddingStore(shape.dim, "toy/" + std::to_string(shape.dim));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> ctx_len(0, 2 * shape.theta);
  std::uniform_int_distribution<std::size_t> source(0, shape.n_sources - 1);

  std::vector<BenchmarkEntry> entries;
  std::vector<std::vector<double>> raw;
  for (std::size_t i = 0; i < shape.n_pool; ++i) {
    BenchmarkEntry e;
    // Ids are shuffled relative to position so id order differs from pool order.
    e.id = padded_id("e", (i * 7919) % 1000003);
    e.source = "src" + std::to_string(source(gen));
    e.query = words(gen, 3 + i % 5);
    if (unit(gen) < 0.5) {
      const auto n = ctx_len(gen);
      if (n > 0) e.context = words(gen, n);
    }
    e.context_token_count = e.context ? token_count(*e.context) : 0;
    e.golden_answers = {"x"};
    if (!raw.empty() && unit(gen) < shape.tie_rate) {
      std::uniform_int_distribution<std::size_t> prev(0, raw.size() - 1);
      raw.push_back(raw[prev(gen)]);
    } else {
      raw.push_back(gaussian_vector(gen, shape.dim));
    }
    entries.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    toy.store.insert(entries[i].id, EmbeddingVector::normalize(raw[i]));
  }
  toy.pool = make_pool(std::move(entries));

  std::vector<WildQuery> queries;
  for (std::size_t q = 0; q < shape.n_queries; ++q) {
    WildQuery w{padded_id("q", q), words(gen, 4)};
    toy.store.insert(w.id, EmbeddingVector::normalize(gaussian_vector(gen, shape.dim)));
    queries.push_back(std::move(w));
  }
  toy.corpus = WildQueryCorpus(std::move(queries));
  return toy;
}

struct ToyFiles {
  fs::path pool;
  fs::path corpus;
  fs::path store;
};

/// Writes a toy instance as the pool, corpus, and store files the CLI reads.
inline ToyFiles write_toy(const ToyInstance& toy, const fs::path& dir) {
  ToyFiles files{dir / "pool.jsonl", dir / "corpus.jsonl", dir / "store.jsonl"};
  write_text(files.pool, serialize_pool(toy.pool));
  std::string corpus;
  for (const auto& q : toy.corpus.queries()) corpus += Json{{"id", q.id}, {"text", q.text}}.dump() + "\n";
  write_text(files.corpus, corpus);
  write_text(files.store, serialize_store(toy.store));
  return files;
}

/// A mixed benchmark whose entries fall into `n_topics` embedding clusters,
/// with a synthetic error matrix from models of graded skill. Entry hardness
/// depends on the topic, so difficulty-first sampling is pulled toward some
/// clusters and the distribution cap has work to do.
struct HardFixture {
  MixedBenchmark mixed;
  EmbeddingStore store{1, "hard/1"};
  DifficultyMatrix difficulty{{"m"}, {"e"}, {0}};
  std::vector<double> xi;
};

inline HardFixture make_hard_fixture(std::uint64_t seed, std::size_t n_entries, std::size_t n_models = 20,
                                     std::size_t dim = 8, std::size_t n_topics = 12) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  HardFixture f;
  f.store = EmbeddingStore(dim, "hard/" + std::to_string(dim));
  f.mixed.version_id = "fixture-" + std::to_string(seed);
  f.mixed.fingerprint = f.store.fingerprint();

  std::vector<std::vector<double>> centers;
  std::vector<double> topic_hardness;
  for (std::size_t t = 0; t < n_topics; ++t) {
    centers.push_back(gaussian_vector(gen, dim));
    topic_hardness.push_back(2.0 * normal(gen));
  }
  std::vector<double> hardness;
  for (std::size_t i = 0; i < n_entries; ++i) {
    const std::size_t t = i % n_topics;
    auto v = centers[t];
    for (auto& x : v) x = 3.0 * x + normal(gen);
    const auto id = padded_id("h", i);
    f.store.insert(id, EmbeddingVector::normalize(v));
    f.mixed.entries.push_back({padded_id("w", i), id, "topic" + std::to_string(t), 0.5, std::nullopt});
    hardness.push_back(topic_hardness[t] + normal(gen));
  }

  std::vector<std::string> models;
  std::vector<std::string> ids;
  for (const auto& e : f.mixed.entries) ids.push_back(e.entry_id);
  std::vector<std::uint8_t> errors;
  for (std::size_t j = 0; j < n_models; ++j) {
    models.push_back(padded_id("model", j, 2));
    const double skill = -2.0 + 4.0 * static_cast<double>(j) / static_cast<double>(n_models);
    for (std::size_t i = 0; i < n_entries; ++i) {
      const double p = 1.0 / (1.0 + std::exp(skill - hardness[i]));
      errors.push_back(unit(gen) < p ? 1 : 0);
    }
  }
  f.difficulty = DifficultyMatrix(models, ids, errors);
  f.xi = difficulty_scores(f.difficulty);
  return f;
}

// ---------------------------------------------------------------------------
// Oracles

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Exhaustive scan: best eligible entry for one query, smallest id on ties.
inline std::string oracle_argmax(const std::vector<double>& query, const BenchmarkPool& pool,
                                 const EmbeddingStore& store, std::size_t theta) {
  std::string best_id;
  double best = -2.0;
  for (const auto& e : pool.entries()) {
    if (e.context_token_count > theta) continue;
    const auto& v = store.at(e.id).values();
    const double s = dot(query, std::vector<double>(v.begin(), v.end()));
    if (best_id.empty() || s > best || (s == best && e.id < best_id)) {
      best = s;
      best_id = e.id;
    }
  }
  return best_id;
}

/// xi_i = sum_j (1 - mean_k A[j][k]) * A[j][i], by explicit double loop.
inline std::vector<double> oracle_xi(const std::vector<std::vector<int>>& a) {
  const std::size_t m = a.size();
  const std::size_t n = a.front().size();
  std::vector<double> mu(m);
  for (std::size_t j = 0; j < m; ++j) {
    double wrong = 0.0;
    for (std::size_t k = 0; k < n; ++k) wrong += a[j][k];
    mu[j] = 1.0 - wrong / static_cast<double>(n);
  }
  std::vector<double> xi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) xi[i] += mu[j] * a[j][i];
  }
  return xi;
}

/// O(n^2) average ranks: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) less += 1.0;
      if (v[j] == v[i]) equal += 1.0;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return oracle_pearson(oracle_ranks(x), oracle_ranks(y));
}

/// Least squares through the normal equations in closed form.
struct OracleFit {
  double slope;
  double intercept;
};

inline OracleFit oracle_least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/// 1 - |A n B| / |A u B| from sorted copies, evaluated as the single
/// rational (|A u B| - |A n B|) / |A u B| so the result is correctly rounded.
inline double oracle_jaccard_distance(std::set<std::string> a, std::set<std::string> b) {
  std::vector<std::string> inter;
  std::vector<std::string> uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  return static_cast<double>(uni.size() - inter.size()) / static_cast<double>(uni.size());
}

/// Mean and standard deviation of the unique ratio between two independent
/// uniform n-subsets of an N-set. The overlap K is hypergeometric and the
/// ratio is 1 - K / (2n - K).
struct Moments {
  double mean;
  double sd;
};

inline Moments hypergeometric_unique_ratio(std::uint64_t population, std::uint64_t n) {
  const boost::math::hypergeometric_distribution<double> overlap(n, n, population);
  const auto range = boost::math::support(overlap);
  double m1 = 0.0;
  double m2 = 0.0;
  for (auto k = range.first; k <= range.second; ++k) {
    const double p = boost::math::pdf(overlap, k);
    const double r = 1.0 - static_cast<double>(k) / static_cast<double>(2 * n - k);
    m1 += p * r;
    m2 += p * r * r;
  }
  return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

/// Upper-tail p-value of Pearson's chi-square goodness-of-fit statistic.
inline double chi_square_p_value(const std::vector<double>& observed, const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  const boost::math::chi_squared_distribution<double> dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// ---------------------------------------------------------------------------
// In-process HTTP servers

/// Runs an httplib server on a free local port for the lifetime of the object.
class LocalServer {
 public:
  LocalServer() = default;
  ~LocalServer() { stop(); }
  LocalServer(const LocalServer&) = delete;
  LocalServer& operator=(const LocalServer&) = delete;

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string url(const std::string& path = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// Deterministic raw (unnormalized) embedding of a text for mock servers.
inline std::vector<double> fake_embedding(const std::string& text, std::size_t dim) {
  std::mt19937_64 gen(std::hash<std::string>{}(text));
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = u(gen);
  return v;
}

/// Mock embedding service speaking the /health and /embed protocol.
class MockEmbeddingService {
 public:
  explicit MockEmbeddingService(std::size_t dim = 6, std::string model = "mock-model") : dim_(dim), model_(std::move(model)) {
    auto& s = server_.server();
    s.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      Json j{{"status", "ok"}, {"model", model_}, {"dimension", dim_}};
      res.set_content(j.dump(), "application/json");
    });
    s.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      if (fail_next > 0) {
        --fail_next;
        res.status = 503;
        res.set_content("{\"error\":\"busy\"}", "application/json");
        return;
      }
      const auto body = Json::parse(req.body);
      if (!body.contains("texts") || body["texts"].empty()) {
        res.status = 400;
        res.set_content("{\"error\":\"texts must be a nonempty list\"}", "application/json");
        return;
      }
      Json vectors = Json::array();
      for (const auto& t : body["texts"]) {
        ++texts_embedded;
        vectors.push_back(fake_embedding(t.get<std::string>(), wrong_dimension ? dim_ + 1 : dim_));
      }
      Json j{{"dimension", wrong_dimension ? dim_ + 1 : dim_},
             {"fingerprint", model_ + "/" + std::to_string(dim_)},
             {"vectors", vectors}};
      res.set_content(j.dump(), "application/json");
    });
    server_.start();
  }

  std::string url() const { return server_.url(); }

  std::atomic<int> requests{0};
  std::atomic<int> texts_embedded{0};
  std::atomic<int> fail_next{0};
  std::atomic<bool> wrong_dimension{false};

 private:
  std::size_t dim_;
  std::string model_;
  LocalServer server_;
};

}  // namespace benchmix::testing
