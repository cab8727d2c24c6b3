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

#include <cstddef>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "benchmix/embedding.hpp"
#include "benchmix/http.hpp"
#include "benchmix/io.hpp"

namespace benchmix {

/// Client for the embedding microservice:
///   GET  /health -> {status, model, dimension}
///   POST /embed  {texts: [...]} -> {dimension, fingerprint, vectors}
/// 503 and transport errors are retried with exponential backoff; 400 is not.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(const std::string& url, RetryPolicy retry = {},
                                 std::size_t max_batch = 256)
      : endpoint_(HttpEndpoint::parse(url)), retry_(retry), max_batch_(max_batch) {}

  std::string fingerprint() override {
    ensure_metadata();
    return model_ + "/" + std::to_string(dimension_);
  }

  std::size_t dimension() override {
    ensure_metadata();
    return dimension_;
  }

  std::size_t max_batch() const override { return max_batch_; }

  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    if (texts.empty()) return {};
    Json body;
    body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
    const auto payload = body.dump();
    const auto expected_dim = dimension();
    return with_retries(retry_, [&] {
      auto res = post_json(endpoint_, "/embed", payload, {}, retry_.timeout);
      const Json reply = check(res, "/embed");
      if (reply.value("dimension", std::size_t{0}) != expected_dim) {
        throw Error(ErrorKind::kDimensionMismatch, "embedding service changed dimension");
      }
      std::vector<std::vector<double>> vectors;
      try {
        vectors = reply.at("vectors").get<std::vector<std::vector<double>>>();
      } catch (const Json::exception& e) {
        throw Error(ErrorKind::kProviderUnavailable, std::string("bad /embed reply: ") + e.what());
      }
      return vectors;
    });
  }

 private:
  Json check(const httplib::Result& res, const std::string& path) const {
    if (!res) {
      throw Error(ErrorKind::kProviderUnavailable,
                  "embedding service " + endpoint_.origin + path + " unreachable: " +
                      httplib::to_string(res.error()));
    }
    if (res->status >= 500) {
      throw Error(ErrorKind::kProviderUnavailable,
                  "embedding service returned " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw Error(ErrorKind::kInvalidArgument, "embedding service rejected request (" +
                                                   std::to_string(res->status) + "): " + res->body);
    }
    try {
      return Json::parse(res->body);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::kProviderUnavailable, std::string("bad reply: ") + e.what());
    }
  }

  void ensure_metadata() {
    std::lock_guard lock(mu_);
    if (dimension_ != 0) return;
    with_retries(retry_, [&] {
      const Json health = check(get(endpoint_, "/health", retry_.timeout), "/health");
      model_ = health.value("model", std::string("unknown"));
      dimension_ = health.value("dimension", std::size_t{0});
      if (dimension_ == 0) throw Error(ErrorKind::kProviderUnavailable, "service reports dimension 0");
      return 0;
    });
  }

  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  std::size_t max_batch_;
  std::mutex mu_;
  std::string model_;
  std::size_t dimension_ = 0;
};

}  // namespace benchmix
