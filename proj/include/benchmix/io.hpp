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
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "benchmix/error.hpp"
#include "json.hpp"

namespace benchmix {

using Json = nlohmann::ordered_json;

/// Location of a record inside a line-delimited file, for error messages.
struct RecordLocation {
  std::string file;
  std::size_t line = 0;

  std::string str() const { return file + ":" + std::to_string(line); }
};

inline std::ifstream open_for_reading(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return in;
}

/// Calls `visit` for every non-blank line of a line-delimited JSON file.
/// Parse failures are reported as malformed records with file and line.
inline void for_each_json_line(
    const std::filesystem::path& path,
    const std::function<void(const Json&, const RecordLocation&)>& visit) {
  auto in = open_for_reading(path);
  std::string line;
  RecordLocation loc{path.string(), 0};
  while (std::getline(in, line)) {
    ++loc.line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorKind::kMalformedRecord, loc.str() + ": " + e.what());
    }
    visit(record, loc);
  }
}

/// Reads a required field, converting type errors into malformed-record errors.
template <typename T>
T require_field(const Json& record, std::string_view key, const RecordLocation& loc) {
  const auto it = record.find(key);
  if (it == record.end()) {
    throw Error(ErrorKind::kMalformedRecord,
                loc.str() + ": missing field '" + std::string(key) + "'");
  }
  try {
    return it->template get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorKind::kMalformedRecord,
                loc.str() + ": field '" + std::string(key) + "' has the wrong type");
  }
}

/// Writes `content` to `path`, refusing to replace an existing file. The data
/// goes to a sibling temporary first so a crash never leaves a partial artifact.
inline void write_new_file(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) {
    throw Error(ErrorKind::kIo, "refusing to overwrite existing file " + path.string());
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  auto in = open_for_reading(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Minimal RFC 4180 style CSV support: quoted fields, doubled quotes, and
// comment lines beginning with '#'.
namespace csv {

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += escape(fields[i]);
  }
  return out;
}

inline std::vector<std::string> split_row(std::string_view line, const RecordLocation& loc) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorKind::kMalformedRecord, loc.str() + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

/// Rows of a CSV file, comments and blank lines skipped. Each row carries its
/// source location.
inline std::vector<std::pair<std::vector<std::string>, RecordLocation>> read_rows(
    const std::filesystem::path& path) {
  auto in = open_for_reading(path);
  std::vector<std::pair<std::vector<std::string>, RecordLocation>> rows;
  std::string line;
  RecordLocation loc{path.string(), 0};
  while (std::getline(in, line)) {
    ++loc.line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    rows.emplace_back(split_row(line, loc), loc);
  }
  return rows;
}

}  // namespace csv

/// Shortest round-trip decimal rendering of a double, used for CSV output.
inline std::string format_real(double value) {
  return Json(value).dump();
}

}  // namespace benchmix
