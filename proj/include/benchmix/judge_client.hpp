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

#include <cstdlib>
#include <optional>
#include <string>
#include <utility>

#include "benchmix/error.hpp"
#include "benchmix/grading.hpp"
#include "benchmix/http.hpp"
#include "benchmix/io.hpp"

namespace benchmix {

inline constexpr const char* kJudgeTokenEnv = "BENCHMIX_JUDGE_TOKEN";

/// Judge over a chat-completion style HTTP endpoint.
///
/// Request:  {"model", "messages": [{"role","content"}...], "temperature": 0}
/// Response: {"choices": [{"message": {"content": "..."}}]} or {"text": "..."}
///
/// The bearer token is read from BENCHMIX_JUDGE_TOKEN when not given.
class HttpJudgeClient final : public JudgeClient {
 public:
  HttpJudgeClient(const std::string& url, std::string model, RetryPolicy retry = {},
                  std::optional<std::string> token = std::nullopt)
      : endpoint_(HttpEndpoint::parse(url)), model_(std::move(model)), retry_(retry) {
    if (token) {
      token_ = std::move(*token);
    } else if (const char* env = std::getenv(kJudgeTokenEnv)) {
      token_ = env;
    }
  }

  std::string complete(const JudgePrompt& prompt) override {
    Json body;
    body["model"] = model_;
    body["temperature"] = 0;
    body["messages"] = Json::array({{{"role", "system"}, {"content", prompt.system_message}},
                                    {{"role", "user"}, {"content", prompt.user_message}}});
    const auto payload = body.dump();
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    return with_retries(retry_, [&]() -> std::string {
      auto res = post_json(endpoint_, "", payload, headers, retry_.timeout);
      if (!res) {
        throw Error(ErrorKind::kJudgeFailure, "judge endpoint unreachable: " + httplib::to_string(res.error()));
      }
      if (res->status == 429 || res->status >= 500) {
        throw Error(ErrorKind::kJudgeFailure, "judge endpoint returned " + std::to_string(res->status));
      }
      if (res->status != 200) {
        throw Error(ErrorKind::kInvalidArgument,
                    "judge endpoint rejected request (" + std::to_string(res->status) + "): " + res->body);
      }
      try {
        const auto reply = Json::parse(res->body);
        if (reply.contains("choices")) return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        return reply.at("text").get<std::string>();
      } catch (const Json::exception& e) {
        throw Error(ErrorKind::kJudgeFailure, std::string("unexpected judge reply: ") + e.what());
      }
    });
  }

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  RetryPolicy retry_;
  std::string token_;
};

}  // namespace benchmix
