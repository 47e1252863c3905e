#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcg/corpus.hpp"

namespace rcg {

struct Finding {
  std::string rule_id;
  int cwe_id = 0;  // 0 = unmapped
  std::string message;
  int line = 1;
  Severity severity = Severity::Warning;
};

struct AnalysisReport {
  std::vector<Finding> findings;
  bool vulnerable = false;  // always equals !findings.empty()
};

struct AnalyzerConfig {
  std::string tool = "semgrep";
  // Registry id or rules file; empty selects the bundled ruleset file.
  std::string ruleset;
  double timeout_seconds = 120.0;
  std::string filename = "snippet.py";
};

struct AnalyzerUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AnalyzerFailure : std::runtime_error {
  AnalyzerFailure(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_output(std::move(raw)) {}
  std::string raw_output;
};

// Pulls source out of a chat completion. Fenced blocks win over prose: the
// first fence tagged with the target language if any, otherwise every fenced
// block concatenated in order. A completion without fences is returned
// verbatim.
std::string extract_code(const std::string& completion,
                         const std::string& target_language = "python");

// Runs the external analyzer on the source written to a private temporary
// file and maps findings to CWEs through the rule table.
AnalysisReport analyze(const std::string& source, const AnalyzerConfig& config,
                       const RuleTable& rules);

// Offline stand-in: one ERROR finding per "VULN_MARKER_<NAME>" occurrence,
// with the CWE read from a fixed marker table.
AnalysisReport oracle_analyze(const std::string& source);

// Default path of the ruleset shipped with the binary.
std::string bundled_ruleset_path();

// Pipeline stages receive the analyzer as a callable over bare source text so
// the external tool and the offline oracle are interchangeable.
using AnalyzerFn = std::function<AnalysisReport(const std::string&)>;

inline AnalyzerFn oracle_analyzer() {
  return [](const std::string& source) { return oracle_analyze(source); };
}

inline AnalyzerFn external_analyzer(AnalyzerConfig config, RuleTable rules) {
  return [config = std::move(config), rules = std::move(rules)](const std::string& source) {
    return analyze(source, config, rules);
  };
}

}  // namespace rcg
