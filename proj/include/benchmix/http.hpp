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

#include <chrono>
#include <cstddef>
#include <functional>
#include <string>
#include <thread>
#include <utility>

#include "benchmix/error.hpp"
#include "httplib.h"

namespace benchmix {

/// Splits "http://host:port/prefix" into the origin httplib connects to and the
/// path prefix prepended to every endpoint.
struct HttpEndpoint {
  std::string origin;
  std::string prefix;

  static HttpEndpoint parse(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "URL needs a scheme: '" + url + "'");
    }
    const auto slash = url.find('/', scheme + 3);
    HttpEndpoint ep;
    ep.origin = url.substr(0, slash);
    if (slash != std::string::npos) ep.prefix = url.substr(slash);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
  }
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{250};
  double multiplier = 2.0;
  std::chrono::seconds timeout{60};
};

/// Runs `attempt` until it succeeds or the policy is exhausted. Only
/// retryable benchmix errors trigger another try; the last one is rethrown.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& attempt) -> decltype(attempt()) {
  auto backoff = policy.initial_backoff;
  for (int i = 1;; ++i) {
    try {
      return attempt();
    } catch (const Error& e) {
      if (!e.retryable() || i >= policy.max_attempts) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
  }
}

/// One-shot POST of a JSON body. Status interpretation is left to the caller.
inline httplib::Result post_json(const HttpEndpoint& ep, const std::string& path,
                                 const std::string& body, const httplib::Headers& headers,
                                 std::chrono::seconds timeout) {
  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client.Post(ep.prefix + path, headers, body, "application/json");
}

inline httplib::Result get(const HttpEndpoint& ep, const std::string& path,
                           std::chrono::seconds timeout) {
  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  return client.Get(ep.prefix + path);
}

}  // namespace benchmix
