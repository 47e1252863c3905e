#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcg/analysis.hpp"
#include "rcg/jsonl.hpp"

namespace rcg {

struct ExecResult {
  int num_tests = 0;
  int num_passed = 0;
  int num_failed = 0;
  struct TestCase {
    std::string name;
    std::string status;  // passed | failed | error
    std::string message;
  };
  std::vector<TestCase> results;
  bool timed_out = false;

  // A timed-out or failing run never counts as passing.
  bool passed() const {
    return !timed_out && num_tests > 0 && num_failed == 0 && num_passed == num_tests;
  }
};

enum class Provenance { Seed, Mcmc };

struct Scenario {
  int cwe_id = 0;
  std::string task_text;
  std::optional<std::string> chosen_library;
  std::optional<std::string> test_code;
  Provenance provenance = Provenance::Seed;
  std::string created_at;  // UTC RFC-3339
};

struct Rollout {
  std::string code;
  AnalysisReport report;
  std::optional<bool> passes_tests;
  std::optional<ExecResult> test_details;
  int draw_index = 0;
};

Json to_json(const ExecResult& r);
ExecResult exec_result_from_json(const Json& j);

Json to_json(const Rollout& r);
Rollout rollout_from_json(const Json& j);

}  // namespace rcg
