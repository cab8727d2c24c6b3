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
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "benchmix/corpus.hpp"
#include "benchmix/error.hpp"
#include "benchmix/io.hpp"
#include "benchmix/judge_templates.hpp"
#include "benchmix/mixture.hpp"
#include "benchmix/parallel.hpp"

namespace benchmix {

struct ModelResponse {
  std::string entry_id;
  std::string model_id;
  std::string text;
};

/// Responses file: `{entry_id, model_id, text}` per line. A (model, entry)
/// pair may appear once.
inline std::vector<ModelResponse> load_responses(const std::filesystem::path& path) {
  std::vector<ModelResponse> out;
  std::set<std::pair<std::string, std::string>> seen;
  for_each_json_line(path, [&](const Json& rec, const RecordLocation& loc) {
    ModelResponse r{require_field<std::string>(rec, "entry_id", loc), require_field<std::string>(rec, "model_id", loc),
                    require_field<std::string>(rec, "text", loc)};
    if (!seen.emplace(r.model_id, r.entry_id).second) {
      throw Error(ErrorKind::kDuplicateId, loc.str() + ": second response from '" + r.model_id + "' for '" +
                                               r.entry_id + "'");
    }
    out.push_back(std::move(r));
  });
  return out;
}

enum class GradeMode { kRule, kJudge };

constexpr std::string_view to_string(GradeMode m) { return m == GradeMode::kRule ? "rule" : "judge"; }

enum class ParseStatus { kOk, kUnparsed };

constexpr std::string_view to_string(ParseStatus s) { return s == ParseStatus::kOk ? "ok" : "unparsed"; }

// ---------------------------------------------------------------------------
// Rule parsers

namespace detail {

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct LetterToken {
  std::size_t pos;
  char letter;
};

// Uppercase letters naming a valid option that stand alone: "B", "B.", "(B)", "B:".
inline std::vector<LetterToken> option_letter_tokens(std::string_view text, std::size_t n_options) {
  std::vector<LetterToken> tokens;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c < 'A' || c >= static_cast<char>('A' + n_options)) continue;
    const bool left_ok = i == 0 || (!is_alnum(text[i - 1]) && text[i - 1] != '\'');
    const bool right_ok = i + 1 == text.size() || (!is_alnum(text[i + 1]) && text[i + 1] != '\'');
    if (left_ok && right_ok) tokens.push_back({i, c});
  }
  return tokens;
}

// True when the letter at `pos` begins its line (ignoring whitespace and '('),
// as in an option label "B. text".
inline bool starts_line(std::string_view text, std::size_t pos) {
  while (pos > 0) {
    const char p = text[pos - 1];
    if (p == '\n') return true;
    if (p != ' ' && p != '\t' && p != '(') return false;
    --pos;
  }
  return true;
}

// End of the first sentence: the first newline, or the first '.', '!' or '?'
// followed by whitespace or end of text. A period closing a line-initial
// option label ("B. ...") does not end the sentence.
inline std::size_t first_sentence_end(std::string_view text, std::span<const LetterToken> tokens) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') return i;
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 < text.size() && !std::isspace(static_cast<unsigned char>(text[i + 1]))) continue;
    if (c == '.') {
      std::size_t j = i;
      if (j > 0 && text[j - 1] == ')') --j;
      const bool label = std::any_of(tokens.begin(), tokens.end(), [&](const LetterToken& t) {
        return t.pos + 1 == j && starts_line(text, t.pos);
      });
      if (label) continue;
    }
    return i;
  }
  return text.size();
}

}  // namespace detail

/// Extracts the chosen option letter from a free-text response, or nullopt
/// when the response is ambiguous or names no option.
///
/// A response equal (case-insensitively, ignoring surrounding whitespace and
/// a final period) to exactly one option's text selects that option.
/// Otherwise the first standalone option letter wins, unless the first
/// sentence mentions two different letters.
inline std::optional<std::string> parse_multichoice_rule(std::string_view response,
                                                         std::span<const std::string> options) {
  if (options.empty()) throw Error(ErrorKind::kInvalidArgument, "multiple-choice parsing needs options");
  auto whole = trim(response);
  if (!whole.empty() && whole.back() == '.') whole = trim(whole.substr(0, whole.size() - 1));
  const auto folded = detail::lower(whole);
  std::optional<std::size_t> text_match;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (detail::lower(trim(options[i])) == folded) {
      if (text_match) {
        text_match.reset();
        break;
      }
      text_match = i;
    }
  }
  if (text_match) return option_letter(*text_match);

  const auto tokens = detail::option_letter_tokens(response, options.size());
  if (tokens.empty()) return std::nullopt;
  const auto end = detail::first_sentence_end(response, tokens);
  std::set<char> first_sentence;
  for (const auto& t : tokens) {
    if (t.pos < end) first_sentence.insert(t.letter);
  }
  if (first_sentence.size() > 1) return std::nullopt;
  return std::string(1, tokens.front().letter);
}

/// Lowercase, punctuation removed, whitespace collapsed, one leading article
/// ("a", "an", "the") dropped.
inline std::string normalize_answer(std::string_view text) {
  std::string words;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::ispunct(c)) continue;
    if (std::isspace(c)) {
      pending_space = !words.empty();
      continue;
    }
    if (pending_space) words += ' ';
    pending_space = false;
    words += static_cast<char>(std::tolower(c));
  }
  for (std::string_view article : {"a ", "an ", "the "}) {
    if (words.starts_with(article)) {
      words.erase(0, article.size());
      break;
    }
  }
  return words;
}

enum class FreeFormMatch { kContains, kExact };

/// 1 when the normalized response matches any normalized gold answer, else 0.
/// Containment is checked on word boundaries.
inline int parse_freeform_rule(std::string_view response, std::span<const std::string> golds,
                               FreeFormMatch match = FreeFormMatch::kContains) {
  if (golds.empty()) throw Error(ErrorKind::kInvalidArgument, "free-form grading needs golden answers");
  const auto resp = normalize_answer(response);
  const auto padded = " " + resp + " ";
  for (const auto& g : golds) {
    const auto gold = normalize_answer(g);
    if (gold.empty()) continue;
    if (match == FreeFormMatch::kExact ? resp == gold : padded.find(" " + gold + " ") != std::string::npos) return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Judge prompts and verdict extraction

struct JudgePrompt {
  std::string system_message;
  std::string user_message;

  friend bool operator==(const JudgePrompt&, const JudgePrompt&) = default;
};

/// Fills each `<name>` placeholder once, left to right. Substituted text is
/// never rescanned, so responses containing placeholder-like text are inert.
inline std::string fill_template(std::string_view tpl,
                                 std::span<const std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    std::size_t best = std::string_view::npos;
    const std::pair<std::string_view, std::string_view>* which = nullptr;
    for (const auto& kv : values) {
      const auto at = tpl.find(kv.first, pos);
      if (at < best) {
        best = at;
        which = &kv;
      }
    }
    if (!which) break;
    out.append(tpl.substr(pos, best - pos));
    out.append(which->second);
    pos = best + which->first.size();
  }
  if (pos < tpl.size()) out.append(tpl.substr(pos));
  return out;
}

inline std::string render_golden_answers(std::span<const std::string> golds) {
  std::string out;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (i) out += "; ";
    out += "<answer " + std::to_string(i + 1) + "> " + golds[i];
  }
  return out;
}

inline std::string render_options(std::span<const std::string> options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i) out += '\n';
    out += option_letter(i) + ". " + options[i];
  }
  return out;
}

inline JudgePrompt build_judge_prompt(const BenchmarkEntry& entry, std::string_view response) {
  if (entry.problem_type == ProblemType::kFreeForm) {
    const auto golds = render_golden_answers(entry.golden_answers);
    const std::pair<std::string_view, std::string_view> values[] = {
        {"<prompt>", entry.query}, {"<golden answers>", golds}, {"<model response>", response}};
    return {std::string(templates::kFreeFormSystem), fill_template(templates::kFreeFormUser, values)};
  }
  const auto options = render_options(entry.options);
  const std::pair<std::string_view, std::string_view> values[] = {
      {"<prompt>", entry.query}, {"<options>", options}, {"<model response>", response}};
  return {std::string(templates::kMultipleChoiceSystem), fill_template(templates::kMultipleChoiceUser, values)};
}

struct ExtractedVerdict {
  ParseStatus status = ParseStatus::kUnparsed;
  double score = 0.0;  // free-form only
  std::string letter;  // multiple-choice only
};

/// Reads the last "[[...]]" in a judge reply. Free-form replies must carry one
/// of 0.0, 0.1, ..., 1.0; multiple-choice replies a single option letter.
inline ExtractedVerdict extract_judge_score(std::string_view judge_text, ProblemType type,
                                            std::size_t n_options = 26) {
  static const std::regex pattern(R"(\[\[([^\[\]]*)\]\])");
  ExtractedVerdict v;
  std::optional<std::string> last;
  const std::string text(judge_text);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern); it != std::sregex_iterator(); ++it) {
    last = (*it)[1].str();
  }
  if (!last) return v;
  const auto content = std::string(trim(*last));
  if (type == ProblemType::kFreeForm) {
    if (content.empty()) return v;
    char* end = nullptr;
    const double x = std::strtod(content.c_str(), &end);
    if (end != content.c_str() + content.size() || !std::isfinite(x)) return v;
    const double tenths = std::round(x * 10.0);
    if (tenths < 0.0 || tenths > 10.0 || std::abs(x * 10.0 - tenths) > 1e-9) return v;
    v.status = ParseStatus::kOk;
    v.score = tenths / 10.0;
    return v;
  }
  if (const auto idx = option_index(content, n_options)) {
    v.status = ParseStatus::kOk;
    v.letter = option_letter(*idx);
  }
  return v;
}

/// Chat-completion style judge: system and user message in, reply text out.
/// Implementations must be callable from several threads.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string complete(const JudgePrompt& prompt) = 0;
};

// ---------------------------------------------------------------------------
// Run grading

struct JudgeVerdict {
  std::string entry_id;
  GradeMode mode = GradeMode::kRule;
  std::optional<std::string> raw_judge_text;
  double score = 0.0;
  std::string letter;  // multiple choice: the extracted option
  ParseStatus parse_status = ParseStatus::kUnparsed;
  bool missing = false;  // no response for this entry
};

struct SplitScore {
  std::size_t count = 0;
  double score = 0.0;
  double proportion = 0.0;
  double error_rate = 0.0;
  std::size_t unparsed = 0;
};

struct ScoreSummary {
  std::map<std::string, SplitScore> per_split;
  double overall = 0.0;
  std::size_t n_entries = 0;
  std::size_t unparsed = 0;
  std::size_t missing = 0;

  double unparsed_rate() const { return n_entries ? static_cast<double>(unparsed) / static_cast<double>(n_entries) : 0.0; }
};

struct GradeReport {
  std::string model_id;
  GradeMode mode = GradeMode::kRule;
  ScoreSummary all;
  std::optional<ScoreSummary> hard;
};

/// Entry-level mean plus per-source means and proportions.
inline ScoreSummary summarize(std::span<const double> scores, std::span<const std::string> sources,
                              std::span<const JudgeVerdict> verdicts) {
  ScoreSummary s;
  s.n_entries = scores.size();
  std::map<std::string, double> sums;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& split = s.per_split[sources[i]];
    ++split.count;
    sums[sources[i]] += scores[i];
    total += scores[i];
    if (verdicts[i].parse_status == ParseStatus::kUnparsed) {
      ++split.unparsed;
      ++s.unparsed;
    }
    if (verdicts[i].missing) ++s.missing;
  }
  if (s.n_entries == 0) return s;
  const auto n = static_cast<double>(s.n_entries);
  s.overall = total / n;
  for (auto& [source, split] : s.per_split) {
    split.score = sums[source] / static_cast<double>(split.count);
    split.proportion = static_cast<double>(split.count) / n;
    split.error_rate = 1.0 - split.score;
  }
  return s;
}

struct GradeOptions {
  GradeMode mode = GradeMode::kRule;
  bool strict_missing = false;  // missing responses raise instead of scoring 0
  std::size_t concurrency = 8;  // judge calls in flight
  FreeFormMatch free_form_match = FreeFormMatch::kContains;
};

struct GradeResult {
  GradeReport report;
  std::vector<JudgeVerdict> verdicts;  // sorted by entry id
};

inline double score_verdict(const BenchmarkEntry& entry, JudgeVerdict& v) {
  if (v.parse_status != ParseStatus::kOk) return 0.0;
  if (entry.problem_type == ProblemType::kMultipleChoice) {
    const bool hit = std::find(entry.golden_answers.begin(), entry.golden_answers.end(), v.letter) !=
                     entry.golden_answers.end();
    v.score = hit ? 1.0 : 0.0;
  }
  return v.score;
}

/// Grades one model's responses over `benchmark`. Unparsed and (unless strict)
/// missing responses score 0 and are counted separately. When `hard_subset`
/// is given, its entries are summarized as well.
inline GradeResult grade_run(const MixedBenchmark& benchmark, const BenchmarkPool& pool,
                             std::span<const ModelResponse> responses, const GradeOptions& options,
                             JudgeClient* judge = nullptr, const MixedBenchmark* hard_subset = nullptr) {
  if (options.mode == GradeMode::kJudge && !judge) {
    throw Error(ErrorKind::kInvalidArgument, "judge mode needs a judge client");
  }
  std::unordered_map<std::string, const ModelResponse*> by_entry;
  std::string model_id;
  for (const auto& r : responses) {
    if (model_id.empty()) model_id = r.model_id;
    if (r.model_id != model_id) {
      throw Error(ErrorKind::kInvalidArgument, "grade_run expects responses from a single model");
    }
    by_entry.emplace(r.entry_id, &r);
  }

  std::vector<const BenchmarkEntry*> entries;
  entries.reserve(benchmark.size());
  for (const auto& me : benchmark.entries) {
    entries.push_back(&pool.at(me.entry_id));
    if (options.strict_missing && !by_entry.count(me.entry_id)) {
      throw Error(ErrorKind::kMissingResponse, "no response for entry '" + me.entry_id + "'");
    }
  }

  std::vector<JudgeVerdict> verdicts(entries.size());
  parallel_for(entries.size(), options.mode == GradeMode::kJudge ? options.concurrency : 1, [&](std::size_t i) {
    const auto& entry = *entries[i];
    auto& v = verdicts[i];
    v.entry_id = entry.id;
    v.mode = options.mode;
    const auto it = by_entry.find(entry.id);
    if (it == by_entry.end()) {
      v.missing = true;
      return;
    }
    const auto& text = it->second->text;
    if (options.mode == GradeMode::kJudge) {
      v.raw_judge_text = judge->complete(build_judge_prompt(entry, text));
      const auto ex = extract_judge_score(*v.raw_judge_text, entry.problem_type, entry.options.size());
      v.parse_status = ex.status;
      v.score = ex.score;
      v.letter = ex.letter;
    } else if (entry.problem_type == ProblemType::kMultipleChoice) {
      if (auto letter = parse_multichoice_rule(text, entry.options)) {
        v.parse_status = ParseStatus::kOk;
        v.letter = std::move(*letter);
      }
    } else {
      v.parse_status = ParseStatus::kOk;
      v.score = parse_freeform_rule(text, entry.golden_answers, options.free_form_match);
    }
  });

  std::vector<double> scores(entries.size());
  std::vector<std::string> sources(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    scores[i] = score_verdict(*entries[i], verdicts[i]);
    sources[i] = entries[i]->source;
  }

  GradeResult result;
  result.report.model_id = model_id;
  result.report.mode = options.mode;
  result.report.all = summarize(scores, sources, verdicts);

  if (hard_subset) {
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < entries.size(); ++i) position.emplace(entries[i]->id, i);
    std::vector<double> hs;
    std::vector<std::string> hsrc;
    std::vector<JudgeVerdict> hv;
    for (const auto& me : hard_subset->entries) {
      const auto it = position.find(me.entry_id);
      if (it == position.end()) {
        throw Error(ErrorKind::kInvalidArgument, "hard entry '" + me.entry_id + "' is not in the graded benchmark");
      }
      hs.push_back(scores[it->second]);
      hsrc.push_back(sources[it->second]);
      hv.push_back(verdicts[it->second]);
    }
    result.report.hard = summarize(hs, hsrc, hv);
  }

  std::stable_sort(verdicts.begin(), verdicts.end(),
                   [](const JudgeVerdict& a, const JudgeVerdict& b) { return a.entry_id < b.entry_id; });
  result.verdicts = std::move(verdicts);
  return result;
}

// ---------------------------------------------------------------------------
// Report rendering

inline Json to_json(const ScoreSummary& s) {
  Json j;
  j["overall"] = s.overall;
  j["n_entries"] = s.n_entries;
  j["unparsed"] = s.unparsed;
  j["unparsed_rate"] = s.unparsed_rate();
  j["missing"] = s.missing;
  Json splits = Json::object();
  for (const auto& [source, sp] : s.per_split) {
    splits[source] = {{"count", sp.count},
                      {"score", sp.score},
                      {"proportion", sp.proportion},
                      {"error_rate", sp.error_rate},
                      {"unparsed", sp.unparsed}};
  }
  j["per_split"] = std::move(splits);
  return j;
}

inline Json to_json(const GradeReport& r) {
  Json j;
  j["model_id"] = r.model_id;
  j["mode"] = to_string(r.mode);
  j["all"] = to_json(r.all);
  if (r.hard) j["hard"] = to_json(*r.hard);
  return j;
}

inline Json to_json(const JudgeVerdict& v) {
  Json j;
  j["entry_id"] = v.entry_id;
  j["mode"] = to_string(v.mode);
  j["parse_status"] = to_string(v.parse_status);
  j["score"] = v.score;
  if (!v.letter.empty()) j["letter"] = v.letter;
  if (v.missing) j["missing"] = true;
  if (v.raw_judge_text) j["raw_judge_text"] = *v.raw_judge_text;
  return j;
}

namespace detail {

inline std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * x);
  return buf;
}

inline void append_summary_table(std::string& out, const std::string& title, const ScoreSummary& s) {
  char line[256];
  std::snprintf(line, sizeof line, "%s: overall %s over %zu entries (unparsed %zu, missing %zu)\n", title.c_str(),
                percent(s.overall).c_str(), s.n_entries, s.unparsed, s.missing);
  out += line;
  std::snprintf(line, sizeof line, "  %-28s %8s %10s %10s %8s\n", "split", "score", "proportion", "error", "count");
  out += line;
  for (const auto& [source, sp] : s.per_split) {
    std::snprintf(line, sizeof line, "  %-28s %8s %9s%% %9s%% %8zu\n", source.c_str(), percent(sp.score).c_str(),
                  percent(sp.proportion).c_str(), percent(sp.error_rate).c_str(), sp.count);
    out += line;
  }
}

}  // namespace detail

inline std::string render_table(const GradeReport& r) {
  std::string out = "model " + r.model_id + " (" + std::string(to_string(r.mode)) + " parser)\n";
  detail::append_summary_table(out, "all", r.all);
  if (r.hard) detail::append_summary_table(out, "hard", *r.hard);
  return out;
}

}  // namespace benchmix
