#include "rcg/jsonl.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>

namespace rcg {

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd_ < 0) {
    throw std::runtime_error("cannot open output file: " + path.string());
  }
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw std::runtime_error("output file is locked by another process: " +
                             path.string());
  }
}

JsonlWriter::~JsonlWriter() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

void JsonlWriter::append(const Json& record) {
  std::string line = record.dump();
  line.push_back('\n');
  std::size_t off = 0;
  while (off < line.size()) {
    ssize_t n = ::write(fd_, line.data() + off, line.size() - off);
    if (n < 0) throw std::runtime_error("write failed: " + path_.string());
    off += static_cast<std::size_t>(n);
  }
  ::fsync(fd_);
}

namespace {

std::vector<std::string> read_raw_lines(const std::filesystem::path& path,
                                        bool* ends_with_newline) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  *ends_with_newline = !content.empty() && content.back() == '\n';
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      lines.push_back(content.substr(pos));
      break;
    }
    lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("no such file: " + path.string());
  }
  bool ends_nl = false;
  auto lines = read_raw_lines(path, &ends_nl);
  std::vector<Json> records;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      records.push_back(Json::parse(lines[i]));
    } catch (const std::exception& e) {
      throw JsonlError("malformed record at " + path.string() + ":" +
                           std::to_string(i + 1) + ": " + e.what(),
                       static_cast<int>(i + 1));
    }
  }
  return records;
}

ResumeScan resume_scan(
    const std::filesystem::path& path,
    const std::function<std::string(const Json&)>& key_fn) {
  ResumeScan scan;
  if (!std::filesystem::exists(path)) return scan;

  bool ends_nl = false;
  auto lines = read_raw_lines(path, &ends_nl);
  std::size_t good_bytes = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const bool last = (i + 1 == lines.size());
    if (lines[i].empty()) {
      good_bytes += 1;
      continue;
    }
    Json record;
    bool ok = true;
    try {
      record = Json::parse(lines[i]);
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) {
      if (!last) {
        throw JsonlError("corrupt record at " + path.string() + ":" +
                             std::to_string(i + 1),
                         static_cast<int>(i + 1));
      }
      // Trailing partial line: keep what parses, back up the original.
      std::filesystem::path bak = path;
      bak += ".bak";
      std::filesystem::copy_file(
          path, bak, std::filesystem::copy_options::overwrite_existing);
      std::filesystem::resize_file(path, good_bytes);
      scan.repaired = true;
      return scan;
    }
    if (last && !ends_nl) {
      // Complete record, interrupted before its newline: terminate it so a
      // later append does not concatenate onto the line.
      std::ofstream fix(path, std::ios::binary | std::ios::app);
      fix << '\n';
    }
    scan.keys.insert(key_fn(record));
    scan.complete_lines += 1;
    good_bytes += lines[i].size() + 1;
  }
  return scan;
}

}  // namespace rcg
