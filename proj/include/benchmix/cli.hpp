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

// Command-line front end. Every command reads a JSON config (--config) whose
// values are overridden by flags, validates inputs up front, writes new
// artifacts into --out without replacing existing files, and re-reads what it
// wrote. Failures print one JSON error record on stderr and exit non-zero.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "benchmix/corpus.hpp"
#include "benchmix/embedding.hpp"
#include "benchmix/error.hpp"
#include "benchmix/grading.hpp"
#include "benchmix/hardset.hpp"
#include "benchmix/http_embedding.hpp"
#include "benchmix/io.hpp"
#include "benchmix/judge_client.hpp"
#include "benchmix/metaeval.hpp"
#include "benchmix/mixture.hpp"
#include "benchmix/versioning.hpp"

namespace benchmix::cli {

namespace fs = std::filesystem;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::vector<std::string> pool;
  std::optional<std::string> corpus;
  std::optional<std::string> store;
  std::optional<std::string> embed_url;
  std::optional<std::string> cache;
  std::optional<std::string> mixed;
  std::optional<std::string> difficulty;
  std::optional<std::string> responses;
  std::optional<std::string> hard_subset;
  std::optional<std::string> scores;
  std::optional<std::string> version_scores;
  std::optional<std::string> reference;
  std::optional<std::string> timestamp;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> n_versions;
  std::optional<std::size_t> theta;
  std::optional<std::size_t> n_queries;
  std::optional<std::string> embed_field;
  bool allow_duplicates = false;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<std::size_t> k_clusters;
  std::optional<std::size_t> n_samples;
  std::optional<std::string> mode;
  std::optional<std::string> judge_url;
  std::optional<std::string> judge_model;
  std::optional<std::size_t> concurrency;
  bool strict = false;
  bool exact_match = false;
  std::optional<std::size_t> min_models;
  bool percent = false;
};

/// Effective configuration: the config file with flag overrides applied.
class RunConfig {
 public:
  explicit RunConfig(Json j) : j_(std::move(j)) {}

  static RunConfig build(const Flags& f) {
    Json j = Json::object();
    if (f.config) {
      const fs::path cfg_path(*f.config);
      try {
        j = Json::parse(read_file(cfg_path));
      } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::kMalformedRecord, cfg_path.string() + ": " + e.what());
      }
      if (!j.is_object()) throw Error(ErrorKind::kMalformedRecord, cfg_path.string() + ": config must be an object");
      resolve_paths(j, cfg_path.parent_path());
    }
    auto set = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    set("out", f.out);
    if (!f.pool.empty()) j["pool"] = f.pool;
    set("corpus", f.corpus);
    set("store", f.store);
    set("embed_url", f.embed_url);
    set("cache", f.cache);
    set("mixed", f.mixed);
    set("difficulty", f.difficulty);
    set("responses", f.responses);
    set("hard_subset", f.hard_subset);
    set("scores", f.scores);
    set("version_scores", f.version_scores);
    set("timestamp", f.timestamp);

    // Insertion may move sibling values, so every section exists before any reference is taken.
    for (const char* name : {"mixture", "hard", "grading", "metaeval", "versions"}) {
      if (!j.contains(name) || !j[name].is_object()) j[name] = Json::object();
    }
    Json& mixture = j["mixture"];
    Json& hard = j["hard"];
    Json& grading = j["grading"];
    Json& metaeval = j["metaeval"];
    Json& versions = j["versions"];
    if (f.seed) {
      mixture["seed"] = *f.seed;
      hard["seed"] = *f.seed;
      versions["base_seed"] = *f.seed;
    }
    if (f.theta) mixture["theta_max_input_tokens"] = *f.theta;
    if (f.n_queries) mixture["n_queries"] = *f.n_queries;
    if (f.embed_field) mixture["embed_field"] = *f.embed_field;
    if (f.allow_duplicates) mixture["allow_duplicate_entries"] = true;
    if (f.lambda) hard["lambda"] = *f.lambda;
    if (f.tau) hard["tau"] = *f.tau;
    if (f.k_clusters) hard["k_clusters"] = *f.k_clusters;
    if (f.n_samples) hard["n_samples"] = *f.n_samples;
    if (f.mode) grading["mode"] = *f.mode;
    if (f.judge_url) grading["judge_url"] = *f.judge_url;
    if (f.judge_model) grading["judge_model"] = *f.judge_model;
    if (f.concurrency) grading["concurrency"] = *f.concurrency;
    if (f.strict) grading["strict_missing"] = true;
    if (f.exact_match) grading["match"] = "exact";
    if (f.min_models) metaeval["min_models"] = *f.min_models;
    if (f.reference) metaeval["reference"] = *f.reference;
    if (f.percent) metaeval["percent"] = true;
    if (!f.seeds.empty()) versions["seeds"] = f.seeds;
    if (f.n_versions) versions["n_versions"] = *f.n_versions;
    return RunConfig(std::move(j));
  }

  const Json& json() const { return j_; }

  /// A path that must be configured and must exist.
  fs::path input(const char* key) const {
    if (!j_.contains(key) || !j_[key].is_string()) {
      throw Error(ErrorKind::kInvalidArgument, std::string("missing required input --") + flag_name(key));
    }
    fs::path p(j_[key].get<std::string>());
    if (!fs::exists(p)) throw Error(ErrorKind::kIo, "input does not exist: " + p.string());
    return p;
  }

  std::optional<fs::path> optional_input(const char* key) const {
    if (!j_.contains(key)) return std::nullopt;
    return input(key);
  }

  std::vector<fs::path> pool_files() const {
    if (!j_.contains("pool")) throw Error(ErrorKind::kInvalidArgument, "missing required input --pool");
    std::vector<fs::path> out;
    for (const auto& p : j_["pool"]) {
      fs::path path(p.get<std::string>());
      if (!fs::exists(path)) throw Error(ErrorKind::kIo, "input does not exist: " + path.string());
      out.push_back(path);
    }
    return out;
  }

  fs::path out_dir() const {
    if (!j_.contains("out")) throw Error(ErrorKind::kInvalidArgument, "missing required --out");
    return fs::path(j_["out"].get<std::string>());
  }

  /// Seeds drive every random choice and must be given explicitly.
  void require_seed(const char* section) const {
    if (!j_.at(section).contains("seed")) {
      throw Error(ErrorKind::kInvalidArgument, std::string("no seed configured for ") + section +
                                                   "; pass --seed or set it in the config");
    }
  }

  MixtureConfig mixture() const { return MixtureConfig::from_json(j_.at("mixture")); }
  HardSamplerConfig hard() const { return HardSamplerConfig::from_json(j_.at("hard")); }
  const Json& section(const char* name) const { return j_.at(name); }

 private:
  static std::string flag_name(std::string key) {
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    return key;
  }

  static void resolve_paths(Json& j, const fs::path& base) {
    static const char* kPathKeys[] = {"out",   "corpus",    "store",      "cache",       "mixed", "difficulty",
                                      "responses", "hard_subset", "scores", "version_scores"};
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };
    for (const char* key : kPathKeys) {
      if (j.contains(key) && j[key].is_string()) j[key] = resolve(j[key].get<std::string>());
    }
    if (j.contains("pool")) {
      if (j["pool"].is_string()) j["pool"] = Json::array({j["pool"]});
      for (auto& p : j["pool"]) p = resolve(p.get<std::string>());
    }
  }

  Json j_;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// CSV artifact with the run configuration embedded as a leading comment.
inline std::string with_config_comment(const RunConfig& cfg, const std::string& body,
                                       const std::string& fingerprint = {}) {
  std::string head = "# config: " + cfg.json().dump() + "\n";
  if (!fingerprint.empty()) head += "# fingerprint: " + fingerprint + "\n";
  return head + body;
}

inline Json json_artifact(const RunConfig& cfg, Json payload) {
  payload["config"] = cfg.json();
  return payload;
}

inline void write_json_artifact(const fs::path& path, const Json& content) {
  write_new_file(path, content.dump(2) + "\n");
  const auto reread = Json::parse(read_file(path));
  if (!reread.is_object()) throw Error(ErrorKind::kIo, "artifact did not round-trip: " + path.string());
}

// ---------------------------------------------------------------------------

inline int cmd_ingest(const RunConfig& cfg, std::ostream& out) {
  Json summary;
  if (cfg.json().contains("pool")) {
    const auto pool = load_pool(cfg.pool_files());
    std::map<std::string, std::size_t> by_source;
    std::size_t mc = 0;
    for (const auto& e : pool.entries()) {
      ++by_source[e.source];
      mc += e.problem_type == ProblemType::kMultipleChoice;
    }
    summary["pool_entries"] = pool.size();
    summary["multiple_choice"] = mc;
    summary["free_form"] = pool.size() - mc;
    summary["sources"] = by_source;
  }
  if (const auto corpus_path = cfg.optional_input("corpus")) {
    summary["wild_queries"] = load_corpus(*corpus_path).size();
  }
  if (summary.is_null()) throw Error(ErrorKind::kInvalidArgument, "ingest needs --pool and/or --corpus");
  if (cfg.json().contains("out")) write_json_artifact(cfg.out_dir() / "ingest.json", json_artifact(cfg, summary));
  out << summary.dump(2) << "\n";
  return 0;
}

inline int cmd_embed(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.json().contains("embed_url")) throw Error(ErrorKind::kInvalidArgument, "missing required --embed-url");
  const auto out_path = cfg.out_dir() / "embeddings.jsonl";
  if (fs::exists(out_path)) throw Error(ErrorKind::kIo, "refusing to overwrite existing file " + out_path.string());
  const auto mixture = cfg.mixture();

  std::vector<std::string> ids;
  std::vector<std::string> texts;
  std::set<std::string> seen;
  auto add = [&](const std::string& id, std::string text) {
    if (!seen.insert(id).second) {
      throw Error(ErrorKind::kDuplicateId, "id '" + id + "' appears in both the corpus and the pool");
    }
    ids.push_back(id);
    texts.push_back(std::move(text));
  };
  if (const auto corpus_path = cfg.optional_input("corpus")) {
    const auto corpus = load_corpus(*corpus_path);
    for (const auto& q : corpus.queries()) add(q.id, q.text);
  }
  if (cfg.json().contains("pool")) {
    const auto pool = load_pool(cfg.pool_files());
    for (const auto& e : pool.entries()) add(e.id, embedding_text(e, mixture.embed_field));
  }
  if (ids.empty()) throw Error(ErrorKind::kInvalidArgument, "embed needs --pool and/or --corpus");

  HttpEmbeddingProvider provider(cfg.json()["embed_url"].get<std::string>());
  std::optional<EmbeddingCache> cache;
  std::optional<fs::path> cache_path;
  if (cfg.json().contains("cache")) {
    cache_path = fs::path(cfg.json()["cache"].get<std::string>());
    if (fs::exists(*cache_path)) {
      cache.emplace(load_store(*cache_path));
    } else {
      cache.emplace(provider.dimension(), provider.fingerprint());
    }
  }
  EmbedOptions options;
  options.cache = cache ? &*cache : nullptr;
  if (cfg.section("grading").contains("concurrency")) options.concurrency = cfg.section("grading")["concurrency"];
  std::size_t cache_hits = 0;
  if (cache) {
    for (const auto& t : texts) cache_hits += cache->lookup(t) != nullptr;
  }
  const auto vectors = embed_batch(texts, provider, options);

  EmbeddingStore store(provider.dimension(), provider.fingerprint());
  for (std::size_t i = 0; i < ids.size(); ++i) store.insert(ids[i], vectors[i]);
  write_new_file(out_path, serialize_store(store));
  (void)load_store(out_path);
  if (cache) {
    // The cache is a reusable scratch file, rewritten in place.
    fs::path tmp = *cache_path;
    tmp += ".new";
    fs::remove(tmp);
    write_new_file(tmp, serialize_store(cache->store()));
    fs::rename(tmp, *cache_path);
  }
  Json summary;
  summary["embeddings"] = out_path.string();
  summary["count"] = store.size();
  summary["fingerprint"] = store.fingerprint();
  summary["cache_hits"] = cache_hits;
  write_json_artifact(cfg.out_dir() / "embed.json", json_artifact(cfg, summary));
  out << summary.dump(2) << "\n";
  return 0;
}

inline int cmd_mix(const RunConfig& cfg, std::ostream& out) {
  cfg.require_seed("mixture");
  const auto pool = load_pool(cfg.pool_files());
  const auto corpus = load_corpus(cfg.input("corpus"));
  const auto store = load_store(cfg.input("store"));
  const auto config = cfg.mixture();
  const auto mb = mix(corpus, pool, store, config);
  const auto path = cfg.out_dir() / (mb.version_id + ".mixed.jsonl");
  write_new_file(path, serialize_mixed(mb));
  validate_against(load_mixed(path), pool);
  Json summary;
  summary["mixed"] = path.string();
  summary["version_id"] = mb.version_id;
  summary["entries"] = mb.size();
  summary["fingerprint"] = mb.fingerprint;
  out << summary.dump(2) << "\n";
  return 0;
}

inline int cmd_hard(const RunConfig& cfg, std::ostream& out) {
  cfg.require_seed("hard");
  const auto mixed = load_mixed(cfg.input("mixed"));
  const auto dm = load_difficulty(cfg.input("difficulty"));
  const auto store = load_store(cfg.input("store"));
  const auto config = cfg.hard();
  const auto xi = align_scores(dm, difficulty_scores(dm), mixed);
  auto sample = sample_hard_detailed(mixed, xi, store, config);
  sample.subset.sampler_config["run_config"] = cfg.json();
  const auto path = cfg.out_dir() / (sample.subset.version_id + ".hard.jsonl");
  write_new_file(path, serialize_mixed(sample.subset));
  (void)load_mixed(path);
  Json summary;
  summary["hard"] = path.string();
  summary["entries"] = sample.subset.size();
  summary["cluster_distance"] = sample.cluster_distance;
  summary["rejections"] = sample.rejections;
  out << summary.dump(2) << "\n";
  return 0;
}

inline int cmd_version(const RunConfig& cfg, std::ostream& out) {
  const auto& vs = cfg.section("versions");
  std::vector<std::uint64_t> seeds;
  if (vs.contains("seeds")) {
    seeds = vs["seeds"].get<std::vector<std::uint64_t>>();
  } else if (vs.contains("base_seed")) {
    const auto base = vs["base_seed"].get<std::uint64_t>();
    const auto n = vs.value("n_versions", std::size_t{5});
    for (std::size_t i = 0; i < n; ++i) seeds.push_back(base + i);
  } else {
    throw Error(ErrorKind::kInvalidArgument, "version needs --seeds or --seed with --n-versions");
  }
  const auto pool = load_pool(cfg.pool_files());
  const auto corpus = load_corpus(cfg.input("corpus"));
  const auto store = load_store(cfg.input("store"));
  const auto version_scores = cfg.optional_input("version_scores");
  const std::string timestamp = cfg.json().value("timestamp", utc_timestamp());

  VersionRegistry registry(cfg.out_dir());
  std::vector<MixedBenchmark> versions;
  for (auto seed : seeds) {
    auto config = cfg.mixture();
    config.seed = seed;
    versions.push_back(new_version(corpus, pool, store, config, timestamp));
    registry.add(versions.back());
    validate_against(registry.load(versions.back().version_id), pool);
  }
  const auto report = compare_versions(versions);
  const auto stem = "report-" + make_version_id(seeds.front(), timestamp);
  write_new_file(cfg.out_dir() / (stem + "-pairs.csv"), with_config_comment(cfg, pairs_csv(report), versions.front().fingerprint));
  Json summary;
  summary["versions"] = Json::array();
  for (const auto& v : versions) summary["versions"].push_back(v.version_id);
  summary["mean_unique_web_query_ratio"] = report.mean_unique_web_query_ratio;
  summary["mean_unique_entry_ratio"] = report.mean_unique_entry_ratio;
  if (version_scores) {
    const auto stability = stability_report(load_version_scores(*version_scores));
    write_new_file(cfg.out_dir() / (stem + "-stability.csv"), with_config_comment(cfg, stability_csv(stability), versions.front().fingerprint));
    summary["grand_mean"] = stability.grand_mean;
    summary["grand_std"] = stability.grand_std;
  }
  out << summary.dump(2) << "\n";
  return 0;
}

inline int cmd_grade(const RunConfig& cfg, std::ostream& out) {
  const auto& g = cfg.section("grading");
  GradeOptions options;
  const auto mode = g.value("mode", std::string("rule"));
  if (mode == "rule") {
    options.mode = GradeMode::kRule;
  } else if (mode == "judge") {
    options.mode = GradeMode::kJudge;
  } else {
    throw Error(ErrorKind::kInvalidArgument, "--mode must be rule or judge, got '" + mode + "'");
  }
  options.concurrency = g.value("concurrency", options.concurrency);
  options.strict_missing = g.value("strict_missing", false);
  options.free_form_match = g.value("match", std::string("contains")) == "exact" ? FreeFormMatch::kExact
                                                                                 : FreeFormMatch::kContains;
  const auto pool = load_pool(cfg.pool_files());
  const auto benchmark = load_mixed(cfg.input("mixed"));
  validate_against(benchmark, pool);
  const auto responses = load_responses(cfg.input("responses"));
  std::optional<MixedBenchmark> hard;
  if (const auto hp = cfg.optional_input("hard_subset")) hard = load_mixed(*hp);

  std::optional<HttpJudgeClient> judge;
  if (options.mode == GradeMode::kJudge) {
    if (!g.contains("judge_url")) throw Error(ErrorKind::kInvalidArgument, "judge mode needs --judge-url");
    judge.emplace(g["judge_url"].get<std::string>(), g.value("judge_model", std::string("gpt-3.5-turbo-0125")));
  }

  std::map<std::string, std::vector<ModelResponse>> by_model;
  for (const auto& r : responses) by_model[r.model_id].push_back(r);
  if (by_model.empty()) throw Error(ErrorKind::kInvalidArgument, "responses file is empty");

  Json reports = Json::array();
  std::string table;
  const auto dir = cfg.out_dir();
  for (const auto& [model, rs] : by_model) {
    const auto result = grade_run(benchmark, pool, rs, options, judge ? &*judge : nullptr, hard ? &*hard : nullptr);
    Json head;
    head["config"] = cfg.json();
    head["benchmark"] = benchmark.version_id;
    head["fingerprint"] = benchmark.fingerprint;
    std::string verdicts = head.dump() + "\n";
    for (const auto& v : result.verdicts) verdicts += to_json(v).dump() + "\n";
    write_new_file(dir / ("verdicts-" + model + ".jsonl"), verdicts);
    reports.push_back(to_json(result.report));
    table += render_table(result.report) + "\n";
  }
  Json payload;
  payload["benchmark"] = benchmark.version_id;
  payload["fingerprint"] = benchmark.fingerprint;
  payload["reports"] = reports;
  write_json_artifact(dir / "grade_report.json", json_artifact(cfg, payload));
  write_new_file(dir / "grade_report.txt", table);
  out << table;
  return 0;
}

inline int cmd_corr(const RunConfig& cfg, std::ostream& out) {
  const auto& me = cfg.section("metaeval");
  const auto min_models = me.value("min_models", std::size_t{15});
  const bool percent = me.value("percent", false);
  const auto tables = load_score_tables(cfg.input("scores"));
  const auto matrix = correlation_matrix(tables.tables, min_models);
  const auto dir = cfg.out_dir();
  write_new_file(dir / "correlation.csv", with_config_comment(cfg, matrix_csv(matrix, percent)));
  write_new_file(dir / "n_common_models.csv", with_config_comment(cfg, n_common_csv(matrix)));

  Json summary;
  summary["benchmarks"] = matrix.benchmarks.size();
  summary["warnings"] = tables.warnings;
  for (const auto& w : tables.warnings) out << "warning: " << w << "\n";
  if (me.contains("reference")) {
    const auto reference = me["reference"].get<std::string>();
    const auto& ref = tables.at(reference);
    std::string fits = "benchmark,reference,rho,n_common_models,insufficient,slope,intercept,rmse\n";
    Json cells = Json::object();
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& t : tables.tables) {
      if (t.benchmark_id == reference) continue;
      const auto& cell = matrix.at(t.benchmark_id, reference);
      std::vector<std::string> row{t.benchmark_id, reference, cell.rho ? format_real(*cell.rho) : "",
                                   std::to_string(cell.n_common_models), cell.insufficient ? "true" : "false"};
      common_scores(t, ref, xs, ys);
      try {
        const auto fit = linear_fit(xs, ys);
        row.insert(row.end(), {format_real(fit.slope), format_real(fit.intercept), format_real(fit.rmse)});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kUndefinedStatistic) throw;
        row.insert(row.end(), {"", "", ""});
      }
      fits += csv::join_row(row) + "\n";
      cells[t.benchmark_id] = {{"rho", cell.rho ? Json(*cell.rho) : Json(nullptr)},
                               {"n_common_models", cell.n_common_models}};
    }
    write_new_file(dir / "fits.csv", with_config_comment(cfg, fits));
    summary["reference"] = reference;
    summary["correlations"] = cells;
  }
  write_json_artifact(dir / "corr.json", json_artifact(cfg, summary));
  out << summary.dump(2) << "\n";
  return 0;
}

inline int cmd_stats(const RunConfig& cfg, std::ostream& out) {
  const auto pool = load_pool(cfg.pool_files());
  const auto mb = load_mixed(cfg.input("mixed"));
  validate_against(mb, pool);
  const auto stats = benchmark_statistics(mb, pool);
  const auto hist = split_histogram(mb);
  Json payload;
  payload["version_id"] = mb.version_id;
  payload["fingerprint"] = mb.fingerprint;
  payload["benchmark_config"] = mb.config.to_json();
  payload["statistics"] = stats.to_json();
  Json splits = Json::object();
  std::string csv_body = "source,count,fraction\n";
  for (const auto& [source, share] : hist) {
    splits[source] = {{"count", share.count}, {"fraction", share.fraction}};
    csv_body += csv::join_row({source, std::to_string(share.count), format_real(share.fraction)}) + "\n";
  }
  payload["splits"] = splits;
  const auto dir = cfg.out_dir();
  write_json_artifact(dir / (mb.version_id + ".stats.json"), json_artifact(cfg, payload));
  write_new_file(dir / (mb.version_id + ".splits.csv"), with_config_comment(cfg, csv_body, mb.fingerprint));
  out << payload.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

inline void print_error(std::ostream& err, std::string_view kind, const std::string& message) {
  Json rec;
  rec["error"] = kind;
  rec["message"] = message;
  err << rec.dump() << "\n";
}

/// Parses `args` (args[0] is the program name) and runs one command.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"benchmix: benchmark mixture, hard-subset sampling, grading, and meta-evaluation"};
  app.name("benchmix");
  app.require_subcommand(1, 1);
  Flags f;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("--out", f.out, "Output directory");
  };
  auto pool_opt = [&](CLI::App* cmd) { cmd->add_option("--pool", f.pool, "Benchmark pool files")->expected(1, -1); };
  auto mixture_opts = [&](CLI::App* cmd) {
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--theta", f.theta, "Maximum input (context) tokens of a selectable entry");
    cmd->add_option("--n-queries", f.n_queries, "Wild queries sampled per benchmark");
    cmd->add_flag("--allow-duplicates", f.allow_duplicates, "Let several queries retrieve the same entry");
    cmd->add_option("--embed-field", f.embed_field, "query_only or context_plus_query");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate pool and corpus files");
  common(ingest);
  pool_opt(ingest);
  ingest->add_option("--corpus", f.corpus, "Wild-query corpus file");

  auto* embed = app.add_subcommand("embed", "Embed corpus and pool texts through the embedding service");
  common(embed);
  pool_opt(embed);
  embed->add_option("--corpus", f.corpus, "Wild-query corpus file");
  embed->add_option("--embed-url", f.embed_url, "Embedding service base URL");
  embed->add_option("--cache", f.cache, "Embedding cache file (read and updated)");
  embed->add_option("--embed-field", f.embed_field, "query_only or context_plus_query");
  embed->add_option("--concurrency", f.concurrency, "Requests in flight");

  auto* mixc = app.add_subcommand("mix", "Build a mixed benchmark");
  common(mixc);
  pool_opt(mixc);
  mixc->add_option("--corpus", f.corpus, "Wild-query corpus file");
  mixc->add_option("--store", f.store, "Precomputed embedding store");
  mixture_opts(mixc);

  auto* hard = app.add_subcommand("hard", "Draw the hard subset of a mixed benchmark");
  common(hard);
  hard->add_option("--mixed", f.mixed, "Mixed benchmark file");
  hard->add_option("--difficulty", f.difficulty, "Difficulty matrix file");
  hard->add_option("--store", f.store, "Precomputed embedding store");
  hard->add_option("--seed", f.seed, "Random seed");
  hard->add_option("--lambda", f.lambda, "Softmax temperature on normalized difficulty");
  hard->add_option("--tau", f.tau, "Cluster-distance cap");
  hard->add_option("--k-clusters", f.k_clusters, "Clusters in the reference partition");
  hard->add_option("--n-samples", f.n_samples, "Size of the hard subset");

  auto* version = app.add_subcommand("version", "Emit new benchmark versions and compare them");
  common(version);
  pool_opt(version);
  version->add_option("--corpus", f.corpus, "Wild-query corpus file");
  version->add_option("--store", f.store, "Precomputed embedding store");
  mixture_opts(version);
  version->add_option("--seeds", f.seeds, "Explicit seed per version")->expected(1, -1);
  version->add_option("--n-versions", f.n_versions, "Versions seeded seed, seed+1, ...");
  version->add_option("--version-scores", f.version_scores, "CSV version_id,model_id,score for stability");
  version->add_option("--timestamp", f.timestamp, "Creation timestamp to stamp (default: now, UTC)");

  auto* grade = app.add_subcommand("grade", "Grade model responses");
  common(grade);
  pool_opt(grade);
  grade->add_option("--mixed", f.mixed, "Benchmark being graded");
  grade->add_option("--hard-subset", f.hard_subset, "Hard subset to report separately");
  grade->add_option("--responses", f.responses, "Responses file");
  grade->add_option("--mode", f.mode, "rule or judge");
  grade->add_option("--judge-url", f.judge_url, "Chat-completion endpoint for the judge");
  grade->add_option("--judge-model", f.judge_model, "Judge model name");
  grade->add_option("--concurrency", f.concurrency, "Judge calls in flight");
  grade->add_flag("--strict", f.strict, "Fail on missing responses instead of scoring 0");
  grade->add_flag("--exact-match", f.exact_match, "Free-form rule parser requires exact match");

  auto* corr = app.add_subcommand("corr", "Correlation matrix and linear fits");
  common(corr);
  corr->add_option("--scores", f.scores, "Score table CSV");
  corr->add_option("--min-models", f.min_models, "Pairs with fewer common models are flagged");
  corr->add_option("--reference", f.reference, "Column to fit every benchmark against (e.g. an Elo column)");
  corr->add_flag("--percent", f.percent, "Write correlations as percentages");

  auto* stats = app.add_subcommand("stats", "Statistics and split histogram of a mixed benchmark");
  common(stats);
  pool_opt(stats);
  stats->add_option("--mixed", f.mixed, "Mixed benchmark file");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return 2;
  }

  try {
    const auto cfg = RunConfig::build(f);
    if (*ingest) return cmd_ingest(cfg, out);
    if (*embed) return cmd_embed(cfg, out);
    if (*mixc) return cmd_mix(cfg, out);
    if (*hard) return cmd_hard(cfg, out);
    if (*version) return cmd_version(cfg, out);
    if (*grade) return cmd_grade(cfg, out);
    if (*corr) return cmd_corr(cfg, out);
    if (*stats) return cmd_stats(cfg, out);
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 1;
}

}  // namespace benchmix::cli
