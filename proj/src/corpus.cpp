#include "rcg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "rcg/util.hpp"

#ifndef RCG_DATA_DIR
#define RCG_DATA_DIR "data"
#endif

namespace rcg {

std::string to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "INFO";
    case Severity::Warning: return "WARNING";
    case Severity::Error: return "ERROR";
  }
  return "WARNING";
}

Severity severity_from_string(const std::string& text) {
  const std::string t = util::to_lower(util::trim(text));
  if (t == "info") return Severity::Info;
  if (t == "error") return Severity::Error;
  return Severity::Warning;
}

std::set<std::string> title_hotwords(const std::string& title) {
  std::set<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 4) words.insert(cur);
    cur.clear();
  };
  for (char c : title) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else
      flush();
  }
  flush();
  return words;
}

Json to_json(const CweRecord& r) {
  Json j;
  j["cwe_id"] = r.cwe_id;
  j["title"] = r.title;
  j["description"] = r.description;
  j["examples"] = Json::array();
  for (const auto& e : r.examples)
    j["examples"].push_back(Json{{"code", e.code}, {"language", e.language}});
  j["suggested_libraries"] = r.suggested_libraries;
  j["hotwords"] = std::vector<std::string>(r.hotwords.begin(), r.hotwords.end());
  j["top25"] = r.top25;
  return j;
}

namespace {

[[noreturn]] void corpus_error(const std::filesystem::path& path, int line,
                               const std::string& what) {
  throw std::runtime_error("corpus " + path.string() + " line " + std::to_string(line) +
                           ": " + what);
}

}  // namespace

Corpus Corpus::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("corpus: cannot open " + path.string());

  Corpus corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const std::exception& e) {
      corpus_error(path, line_no, std::string("malformed record: ") + e.what());
    }
    if (rec.contains("snapshot_year")) {
      corpus.snapshot_year_ = rec.at("snapshot_year").get<int>();
      continue;
    }
    CweRecord r;
    if (!rec.contains("cwe_id") || !rec.at("cwe_id").is_number_integer())
      corpus_error(path, line_no, "missing cwe_id");
    r.cwe_id = rec.at("cwe_id").get<int>();
    if (r.cwe_id <= 0) corpus_error(path, line_no, "cwe_id must be positive");
    if (!rec.contains("title") || !rec.at("title").is_string() ||
        rec.at("title").get<std::string>().empty())
      corpus_error(path, line_no, "missing title");
    r.title = rec.at("title").get<std::string>();
    r.description = rec.value("description", std::string{});
    if (rec.contains("examples"))
      for (const auto& e : rec.at("examples"))
        r.examples.push_back({e.value("code", std::string{}),
                              e.value("language", std::string{"python"})});
    if (rec.contains("suggested_libraries"))
      r.suggested_libraries = rec.at("suggested_libraries").get<std::vector<std::string>>();
    r.hotwords = title_hotwords(r.title);
    if (rec.contains("hotwords"))
      for (const auto& w : rec.at("hotwords"))
        r.hotwords.insert(util::to_lower(w.get<std::string>()));
    r.top25 = rec.value("top25", false);
    for (const auto& prev : corpus.records_)
      if (prev.cwe_id == r.cwe_id)
        corpus_error(path, line_no, "duplicate cwe_id " + std::to_string(r.cwe_id));
    corpus.records_.push_back(std::move(r));
  }
  return corpus;
}

Corpus Corpus::bundled() {
  return load(std::filesystem::path(RCG_DATA_DIR) / "cwe_corpus.jsonl");
}

void Corpus::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("corpus: cannot write " + path.string());
  if (snapshot_year_ != 0) out << Json{{"snapshot_year", snapshot_year_}}.dump() << "\n";
  for (const auto& r : records_) out << to_json(r).dump() << "\n";
}

std::vector<CweRecord> Corpus::top25() const {
  std::vector<CweRecord> out;
  for (const auto& r : records_)
    if (r.top25) out.push_back(r);
  if (out.size() != 25)
    throw std::runtime_error("top-25 selection: expected 25 flagged records, found " +
                             std::to_string(out.size()));
  return out;
}

std::optional<CweRecord> Corpus::find(int cwe_id) const {
  for (const auto& r : records_)
    if (r.cwe_id == cwe_id) return r;
  return std::nullopt;
}

RuleTable RuleTable::load(const std::filesystem::path& path) {
  RuleTable table;
  for (const auto& rec : read_jsonl(path)) {
    RuleMapping m;
    m.rule_id = rec.at("rule_id").get<std::string>();
    m.cwe_id = rec.at("cwe_id").get<int>();
    m.severity = severity_from_string(rec.value("severity", std::string{"WARNING"}));
    for (const auto& prev : table.rows_)
      if (prev.rule_id == m.rule_id)
        throw std::runtime_error("rule table: duplicate rule_id " + m.rule_id);
    table.rows_.push_back(std::move(m));
  }
  return table;
}

RuleTable RuleTable::bundled() {
  return load(std::filesystem::path(RCG_DATA_DIR) / "rule_map.jsonl");
}

std::optional<int> RuleTable::cwe_for(const std::string& rule_id) const {
  for (const auto& m : rows_)
    if (m.rule_id == rule_id) return m.cwe_id;
  return std::nullopt;
}

std::optional<Severity> RuleTable::severity_for(const std::string& rule_id) const {
  for (const auto& m : rows_)
    if (m.rule_id == rule_id) return m.severity;
  return std::nullopt;
}

bool scenario_leaks(const std::string& text, const CweRecord& record) {
  if (util::contains_ci(text, "cwe")) return true;
  for (const auto& w : record.hotwords)
    if (util::contains_token(text, w)) return true;
  return false;
}

}  // namespace rcg
