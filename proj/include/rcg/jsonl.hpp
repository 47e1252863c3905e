#pragma once

#include <filesystem>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rcg {

// Records keep their field order on round-trip, so a parse/serialize cycle is
// byte-stable.
using Json = nlohmann::ordered_json;

struct JsonlError : std::runtime_error {
  JsonlError(const std::string& msg, int line_number)
      : std::runtime_error(msg), line(line_number) {}
  int line;
};

// Append-only line-delimited writer holding an exclusive advisory lock for
// its lifetime. One command process owns one output file.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  void append(const Json& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

// Parses every line; throws JsonlError naming the first bad line.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

struct ResumeScan {
  std::set<std::string> keys;
  int complete_lines = 0;
  bool repaired = false;  // trailing partial line dropped, .bak written
};

// Scans an output file for completed record keys. A trailing truncated line
// is dropped after a backup copy is written; corruption anywhere else is an
// error naming the line. A missing file yields an empty key set.
ResumeScan resume_scan(const std::filesystem::path& path,
                       const std::function<std::string(const Json&)>& key_fn);

}  // namespace rcg
