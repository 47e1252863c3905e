#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rcg/jsonl.hpp"

namespace rcg {

enum class Severity { Info, Warning, Error };

std::string to_string(Severity s);
Severity severity_from_string(const std::string& text);

struct ExampleSnippet {
  std::string code;
  std::string language;
};

struct CweRecord {
  int cwe_id = 0;
  std::string title;
  std::string description;
  std::vector<ExampleSnippet> examples;
  std::vector<std::string> suggested_libraries;
  // Lowercase tokens whose presence in a scenario counts as label leakage.
  // Always a superset of the >= 4-letter title tokens.
  std::set<std::string> hotwords;
  bool top25 = false;
};

// Tokens of the title after splitting on non-alphanumerics, lowercased,
// keeping only tokens of length >= 4.
std::set<std::string> title_hotwords(const std::string& title);

Json to_json(const CweRecord& record);

class Corpus {
 public:
  // Line-delimited records; errors name the offending line. Hotwords are
  // completed from the title when a record omits or under-specifies them.
  static Corpus load(const std::filesystem::path& path);
  static Corpus bundled();  // the dataset shipped alongside the binary

  void save(const std::filesystem::path& path) const;

  const std::vector<CweRecord>& records() const { return records_; }
  // The flagged top-25 slice in file order; throws unless exactly 25 records
  // carry the flag.
  std::vector<CweRecord> top25() const;
  std::optional<CweRecord> find(int cwe_id) const;
  int snapshot_year() const { return snapshot_year_; }

 private:
  std::vector<CweRecord> records_;
  int snapshot_year_ = 0;
};

struct RuleMapping {
  std::string rule_id;
  int cwe_id = 0;
  Severity severity = Severity::Warning;
};

class RuleTable {
 public:
  // Line-delimited {rule_id, cwe_id, severity}; duplicate rule ids are a
  // load-time error.
  static RuleTable load(const std::filesystem::path& path);
  static RuleTable bundled();

  // Unknown rules return nullopt; the caller reports them under cwe_id 0.
  std::optional<int> cwe_for(const std::string& rule_id) const;
  std::optional<Severity> severity_for(const std::string& rule_id) const;
  size_t size() const { return rows_.size(); }

 private:
  std::vector<RuleMapping> rows_;
};

// True when the text names the weakness: any hotword present as a whole
// token, or the substring "cwe" in any casing.
bool scenario_leaks(const std::string& text, const CweRecord& record);

}  // namespace rcg
