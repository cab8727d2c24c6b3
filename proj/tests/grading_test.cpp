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

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "benchmix/grading.hpp"
#include "benchmix/judge_client.hpp"
#include "test_support.hpp"

namespace benchmix {
namespace {

namespace fs = std::filesystem;
using testing::slurp;
using testing::TempDir;
using testing::write_text;

const fs::path kGolden = BENCHMIX_TEST_GOLDEN;

BenchmarkEntry free_form_fixture() {
  BenchmarkEntry e;
  e.id = "ff-christine";
  e.source = "TriviaQA";
  e.problem_type = ProblemType::kFreeForm;
  e.query = "what car was used in the movie christine";
  e.golden_answers = {"a vintage 1958 Plymouth Fury", "1958 Plymouth Fury"};
  return e;
}

BenchmarkEntry multiple_choice_fixture() {
  BenchmarkEntry e;
  e.id = "mc-trees";
  e.source = "PIQA";
  e.problem_type = ProblemType::kMultipleChoice;
  e.query = "Which solution is correct?";
  e.options = {"provide homes for people", "provide homes for animals"};
  e.golden_answers = {"B"};
  return e;
}

TEST(JudgePrompt, FreeFormMatchesGoldenFiles) {
  const auto p = build_judge_prompt(free_form_fixture(), "Christine.");
  EXPECT_EQ(p.system_message, slurp(kGolden / "judge_free_form.system.txt"));
  EXPECT_EQ(p.user_message, slurp(kGolden / "judge_free_form.user.txt"));
  EXPECT_NE(p.system_message.find("act as a judge"), std::string::npos);
  EXPECT_NE(p.user_message.find("\"[[score]]\""), std::string::npos);
  EXPECT_NE(p.user_message.find("Golden Answer(s): <answer 1> a vintage 1958 Plymouth Fury; <answer 2> 1958 Plymouth Fury\n"
                                "Model's Answer: Christine.\nYour Judgment:"),
            std::string::npos);
}

TEST(JudgePrompt, MultipleChoiceMatchesGoldenFiles) {
  const auto response = slurp(kGolden / "multiple_choice_response.txt");
  const auto p = build_judge_prompt(multiple_choice_fixture(), response);
  EXPECT_EQ(p.system_message, slurp(kGolden / "judge_multiple_choice.system.txt"));
  EXPECT_EQ(p.user_message, slurp(kGolden / "judge_multiple_choice.user.txt"));
  EXPECT_NE(p.system_message.find("act as an option extractor"), std::string::npos);
  EXPECT_NE(p.user_message.find("Options:\nA. provide homes for people\nB. provide homes for animals\n"),
            std::string::npos);
}

TEST(JudgePrompt, PlaceholdersInResponsesAreNotExpanded) {
  const auto p = build_judge_prompt(free_form_fixture(), "see <prompt> and <golden answers>");
  EXPECT_NE(p.user_message.find("Model's Answer: see <prompt> and <golden answers>\n"), std::string::npos);
}

TEST(JudgePrompt, InjectiveInTheResponse) {
  std::mt19937_64 gen(41);
  std::set<std::string> responses;
  std::set<std::string> prompts;
  const auto ff = free_form_fixture();
  const auto mc = multiple_choice_fixture();
  for (int i = 0; i < 300; ++i) {
    auto r = testing::words(gen, gen() % 6);
    if (gen() % 3 == 0) r += "\n<model response>";
    if (!responses.insert(r).second) continue;
    prompts.insert(build_judge_prompt(ff, r).user_message);
    prompts.insert(build_judge_prompt(mc, r).user_message);
  }
  EXPECT_EQ(prompts.size(), 2 * responses.size());
}

TEST(ExtractJudgeScore, RecoversEveryGridValue) {
  for (int t = 0; t <= 10; ++t) {
    char reply[96];
    std::snprintf(reply, sizeof reply, "Reasoning [[maybe]] ... The correctness score: [[%.1f]].", t / 10.0);
    const auto v = extract_judge_score(reply, ProblemType::kFreeForm);
    ASSERT_EQ(v.status, ParseStatus::kOk) << reply;
    EXPECT_EQ(v.score, t / 10.0);
  }
  EXPECT_EQ(extract_judge_score("[[1]]", ProblemType::kFreeForm).score, 1.0);
  EXPECT_EQ(extract_judge_score("[[0.55]]", ProblemType::kFreeForm).status, ParseStatus::kUnparsed);
  EXPECT_EQ(extract_judge_score("[[1.1]]", ProblemType::kFreeForm).status, ParseStatus::kUnparsed);
  EXPECT_EQ(extract_judge_score("[[-0.0x]]", ProblemType::kFreeForm).status, ParseStatus::kUnparsed);
  EXPECT_EQ(extract_judge_score("score: 0.5", ProblemType::kFreeForm).status, ParseStatus::kUnparsed);
}

TEST(ExtractJudgeScore, RecoversOptionLetters) {
  const auto v = extract_judge_score("The option chosen by the model: [[B]].", ProblemType::kMultipleChoice, 4);
  ASSERT_EQ(v.status, ParseStatus::kOk);
  EXPECT_EQ(v.letter, "B");
  EXPECT_EQ(extract_judge_score("[[A]] no wait [[ C ]]", ProblemType::kMultipleChoice, 4).letter, "C");
  EXPECT_EQ(extract_judge_score("[[E]]", ProblemType::kMultipleChoice, 4).status, ParseStatus::kUnparsed);
  EXPECT_EQ(extract_judge_score("[[AB]]", ProblemType::kMultipleChoice, 4).status, ParseStatus::kUnparsed);
}

TEST(RuleParser, MultipleChoice) {
  const std::vector<std::string> four{"cellular telephone", "television", "refrigerator", "airplane"};
  EXPECT_EQ(parse_multichoice_rule("D", four), "D");
  EXPECT_EQ(parse_multichoice_rule("The answer is (C).", four), "C");
  EXPECT_EQ(parse_multichoice_rule("The technology that was developed most recently is D. airplane.", four), "D");
  EXPECT_EQ(parse_multichoice_rule("Television.", four), "B");
  EXPECT_EQ(parse_multichoice_rule("I think it is A", four), "A");
  EXPECT_EQ(parse_multichoice_rule("A or B, hard to say.", four), std::nullopt);
  EXPECT_EQ(parse_multichoice_rule("No idea at all", four), std::nullopt);
  EXPECT_EQ(parse_multichoice_rule("B.\nWhat is the name of the first person to be executed by the electric chair? "
                                   "A. John Wilkes Booth B. William Kemmler C. John Dillinger D. Bonnie and Clyde",
                                   four),
            "B");
  EXPECT_EQ(parse_multichoice_rule("B. television\nA. is wrong", four), "B");
  // Hedged answers name two options in the first sentence.
  const auto mc = multiple_choice_fixture();
  EXPECT_EQ(parse_multichoice_rule(slurp(kGolden / "multiple_choice_response.txt"), mc.options), std::nullopt);
  EXPECT_EQ(parse_multichoice_rule("provide homes for animals", mc.options), "B");
}

TEST(RuleParser, FreeForm) {
  const auto golds = free_form_fixture().golden_answers;
  EXPECT_EQ(normalize_answer("  The 1958 Plymouth-Fury!! "), "1958 plymouthfury");
  EXPECT_EQ(normalize_answer("An  apple"), "apple");
  EXPECT_EQ(parse_freeform_rule("It was a 1958 Plymouth Fury.", golds), 1);
  EXPECT_EQ(parse_freeform_rule("Christine.", golds), 0);
  EXPECT_EQ(parse_freeform_rule("11958 Plymouth Fury", golds), 0);
  EXPECT_EQ(parse_freeform_rule("the 1958 plymouth fury", golds, FreeFormMatch::kExact), 1);
  EXPECT_EQ(parse_freeform_rule("It was a 1958 Plymouth Fury.", golds, FreeFormMatch::kExact), 0);
}

/// Judge stub answering from a table keyed by the model response, with a
/// random delay so completion order differs from submission order.
class TableJudge : public JudgeClient {
 public:
  explicit TableJudge(std::map<std::string, std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const JudgePrompt& prompt) override {
    ++calls;
    std::this_thread::sleep_for(std::chrono::microseconds(std::hash<std::string>{}(prompt.user_message) % 2000));
    const auto marker = prompt.user_message.rfind("Model's Answer: ");
    const auto end = prompt.user_message.rfind("\nYour Judgment:");
    return replies_.at(prompt.user_message.substr(marker + 16, end - marker - 16));
  }
  std::atomic<int> calls{0};

 private:
  std::map<std::string, std::string> replies_;
};

struct GradeFixture {
  BenchmarkPool pool;
  MixedBenchmark mixed;
  std::vector<ModelResponse> responses;
};

GradeFixture four_entry_fixture() {
  GradeFixture f;
  std::vector<BenchmarkEntry> entries;
  const char* sources[] = {"TriviaQA", "TriviaQA", "DROP", "MMLU"};
  for (int i = 0; i < 4; ++i) {
    BenchmarkEntry e;
    e.id = "e" + std::to_string(3 - i);  // ids sort opposite to benchmark order
    e.source = sources[i];
    e.query = "question " + std::to_string(i);
    e.golden_answers = {"gold"};
    entries.push_back(e);
    f.mixed.entries.push_back({"q" + std::to_string(i), e.id, e.source, 0.9, std::nullopt});
    f.responses.push_back({e.id, "model-x", "response " + std::to_string(i)});
  }
  f.pool = make_pool(entries);
  f.mixed.version_id = "fixture";
  return f;
}

TEST(GradeRun, FourEntryJudgeFixture) {
  const auto f = four_entry_fixture();
  TableJudge judge({{"response 0", "Correct. [[1.0]]"},
                    {"response 1", "Wrong. [[0.0]]"},
                    {"response 2", "Partly. [[0.5]]"},
                    {"response 3", "Partly. [[0.5]]"}});
  GradeOptions options;
  options.mode = GradeMode::kJudge;
  const auto r = grade_run(f.mixed, f.pool, f.responses, options, &judge);
  const auto& s = r.report.all;
  EXPECT_NEAR(s.overall, 0.5, 1e-12);
  double weighted = 0.0;
  double proportions = 0.0;
  for (const auto& [_, split] : s.per_split) {
    weighted += split.score * split.proportion;
    proportions += split.proportion;
    EXPECT_NEAR(split.error_rate, 1.0 - split.score, 1e-12);
  }
  EXPECT_NEAR(weighted, s.overall, 1e-9);
  EXPECT_NEAR(proportions, 1.0, 1e-9);
  EXPECT_NEAR(s.per_split.at("TriviaQA").score, 0.5, 1e-12);
  EXPECT_NEAR(s.per_split.at("TriviaQA").proportion, 0.5, 1e-12);
  EXPECT_EQ(judge.calls.load(), 4);
  EXPECT_EQ(r.report.model_id, "model-x");
  ASSERT_EQ(r.verdicts.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.verdicts[i].entry_id, "e" + std::to_string(i));
  EXPECT_EQ(*r.verdicts[0].raw_judge_text, "Partly. [[0.5]]");
}

TEST(GradeRun, VerdictOrderIndependentOfCompletionOrder) {
  GradeFixture f;
  std::vector<BenchmarkEntry> entries;
  std::map<std::string, std::string> replies;
  std::mt19937_64 gen(43);
  for (int i = 0; i < 60; ++i) {
    BenchmarkEntry e;
    e.id = testing::padded_id("g", (i * 37) % 60);
    e.source = "s" + std::to_string(i % 3);
    e.query = "q";
    e.golden_answers = {"gold"};
    entries.push_back(e);
    f.mixed.entries.push_back({"w" + std::to_string(i), e.id, e.source, 0.1, std::nullopt});
    f.responses.push_back({e.id, "m", "r" + std::to_string(i)});
    replies["r" + std::to_string(i)] = "[[" + std::to_string(gen() % 11 / 10.0).substr(0, 3) + "]]";
  }
  f.pool = make_pool(entries);
  GradeOptions options;
  options.mode = GradeMode::kJudge;
  TableJudge j1(replies);
  TableJudge j2(replies);
  options.concurrency = 8;
  const auto a = grade_run(f.mixed, f.pool, f.responses, options, &j1);
  options.concurrency = 1;
  const auto b = grade_run(f.mixed, f.pool, f.responses, options, &j2);
  ASSERT_EQ(a.verdicts.size(), b.verdicts.size());
  for (std::size_t i = 0; i < a.verdicts.size(); ++i) {
    EXPECT_EQ(to_json(a.verdicts[i]).dump(), to_json(b.verdicts[i]).dump());
    if (i > 0) {
      EXPECT_LT(a.verdicts[i - 1].entry_id, a.verdicts[i].entry_id);
    }
  }
  EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump());
}

TEST(GradeRun, MissingAndUnparsedScoreZero) {
  auto f = four_entry_fixture();
  f.responses.pop_back();  // e0 has no response
  TableJudge judge({{"response 0", "[[1.0]]"}, {"response 1", "no verdict"}, {"response 2", "[[0.7]]"}});
  GradeOptions options;
  options.mode = GradeMode::kJudge;
  const auto r = grade_run(f.mixed, f.pool, f.responses, options, &judge);
  EXPECT_EQ(r.report.all.missing, 1u);
  EXPECT_EQ(r.report.all.unparsed, 2u);  // the missing one counts as unparsed too
  EXPECT_NEAR(r.report.all.overall, (1.0 + 0.0 + 0.7 + 0.0) / 4.0, 1e-12);
  EXPECT_NEAR(r.report.all.unparsed_rate(), 0.5, 1e-12);

  options.strict_missing = true;
  try {
    grade_run(f.mixed, f.pool, f.responses, options, &judge);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingResponse);
  }
  options.strict_missing = false;
  options.mode = GradeMode::kJudge;
  EXPECT_THROW(grade_run(f.mixed, f.pool, f.responses, options, nullptr), Error);
}

TEST(GradeRun, RuleModeAndHardSubset) {
  std::vector<BenchmarkEntry> entries{free_form_fixture(), multiple_choice_fixture()};
  BenchmarkEntry third = multiple_choice_fixture();
  third.id = "mc-second";
  third.golden_answers = {"A"};
  entries.push_back(third);
  const auto pool = make_pool(entries);
  MixedBenchmark mb;
  for (const auto& e : entries) mb.entries.push_back({"w-" + e.id, e.id, e.source, 0.8, std::nullopt});
  MixedBenchmark hard;
  hard.hard = true;
  hard.entries = {mb.entries[1], mb.entries[2]};
  const std::vector<ModelResponse> responses{{"ff-christine", "m", "a 1958 Plymouth Fury, obviously"},
                                             {"mc-trees", "m", "B"},
                                             {"mc-second", "m", "Both A and B."}};
  const auto r = grade_run(mb, pool, responses, {}, nullptr, &hard);
  EXPECT_NEAR(r.report.all.overall, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r.report.all.unparsed, 1u);
  ASSERT_TRUE(r.report.hard.has_value());
  EXPECT_NEAR(r.report.hard->overall, 0.5, 1e-12);
  EXPECT_EQ(r.report.hard->n_entries, 2u);
  const auto table = render_table(r.report);
  EXPECT_NE(table.find("hard: overall 50.0"), std::string::npos) << table;

  MixedBenchmark stray = hard;
  stray.entries.push_back({"w", "unknown", "s", 0.1, std::nullopt});
  EXPECT_THROW(grade_run(mb, pool, responses, {}, nullptr, &stray), Error);
  const std::vector<ModelResponse> two_models{{"ff-christine", "m", "x"}, {"mc-trees", "n", "B"}};
  EXPECT_THROW(grade_run(mb, pool, two_models, {}), Error);
}

TEST(Responses, FileLoading) {
  TempDir dir;
  write_text(dir / "r.jsonl", "{\"entry_id\":\"a\",\"model_id\":\"m\",\"text\":\"x\"}\n"
                              "{\"entry_id\":\"a\",\"model_id\":\"n\",\"text\":\"y\"}\n");
  EXPECT_EQ(load_responses(dir / "r.jsonl").size(), 2u);
  write_text(dir / "dup.jsonl", "{\"entry_id\":\"a\",\"model_id\":\"m\",\"text\":\"x\"}\n"
                                "{\"entry_id\":\"a\",\"model_id\":\"m\",\"text\":\"y\"}\n");
  EXPECT_THROW(load_responses(dir / "dup.jsonl"), Error);
}

TEST(HttpJudgeClient, SpeaksChatCompletionProtocol) {
  testing::LocalServer server;
  std::atomic<int> calls{0};
  std::string seen_auth;
  Json seen_body;
  std::mutex mu;
  server.server().Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 429;
      return;
    }
    {
      std::lock_guard lock(mu);
      seen_auth = req.get_header_value("Authorization");
      seen_body = Json::parse(req.body);
    }
    Json reply{{"choices", Json::array({{{"message", {{"role", "assistant"}, {"content", "ok [[0.5]]"}}}}})}};
    res.set_content(reply.dump(), "application/json");
  });
  server.start();
  RetryPolicy retry;
  retry.initial_backoff = std::chrono::milliseconds(1);
  HttpJudgeClient client(server.url("/v1/chat"), "judge-model", retry, std::string("secret"));
  const auto text = client.complete({"sys", "user"});
  EXPECT_EQ(text, "ok [[0.5]]");
  EXPECT_EQ(calls.load(), 2);
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(seen_body["model"], "judge-model");
  EXPECT_EQ(seen_body["temperature"], 0);
  EXPECT_EQ(seen_body["messages"][0]["role"], "system");
  EXPECT_EQ(seen_body["messages"][1]["content"], "user");
}

TEST(HttpJudgeClient, ClientErrorsAreNotRetried) {
  testing::LocalServer server;
  std::atomic<int> calls{0};
  server.server().Post("/judge", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  server.start();
  RetryPolicy retry;
  retry.initial_backoff = std::chrono::milliseconds(1);
  HttpJudgeClient client(server.url("/judge"), "m", retry);
  try {
    client.complete({"s", "u"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
  EXPECT_EQ(calls.load(), 1);
}

}  // namespace
}  // namespace benchmix
