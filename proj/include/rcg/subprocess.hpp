#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rcg {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
  bool timed_out = false;
};

// Runs argv[0] with the given arguments, capturing stdout/stderr. On timeout
// the whole process group is killed and timed_out is set. Throws on spawn
// failure (e.g. executable missing from PATH).
ProcessResult run_process(const std::vector<std::string>& argv,
                          double timeout_seconds,
                          const std::optional<std::filesystem::path>& cwd = {});

bool executable_on_path(const std::string& name);

// Scoped temporary directory, removed recursively on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace rcg
