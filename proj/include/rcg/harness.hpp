#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcg/modelio.hpp"
#include "rcg/rollout.hpp"
#include "rcg/stats.hpp"

namespace rcg {

struct TestLimits {
  double timeout_seconds = 60.0;
};

// Generates pytest code for the scenario task. Returns nullopt after three
// attempts that fail validation (fewer than two test functions); the caller
// then proceeds without pass-rate data for this scenario.
std::optional<std::string> generate_tests(const std::string& task_text, Generator& generator,
                                          std::uint64_t draw_base = 0);

// Counts top-level "def test_..." definitions.
int count_test_functions(const std::string& test_code);

// Materializes solution.py and the test file in a fresh temporary directory
// and runs pytest with machine-readable output. Network isolation is applied
// when the platform supports unprivileged "unshare -n"; otherwise the run
// proceeds with a documented caveat.
ExecResult run_tests(const std::string& solution, const std::string& tests,
                     const TestLimits& limits = {});

struct IntervalTriple {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct Confusion {
  long long vulnerable_pass = 0;
  long long vulnerable_fail = 0;
  long long secure_pass = 0;
  long long secure_fail = 0;
};

struct MetricsReport {
  IntervalTriple p_vulnerable;
  IntervalTriple p_tests_pass;
  IntervalTriple p_pass_and_secure;
  std::map<int, IntervalTriple> per_cwe;
  std::map<std::string, long long> severity_histogram;
  Confusion confusion;
  // Per-scenario posterior means, for inspection only.
  std::vector<double> per_scenario_vulnerable_mean;
  long long total_rollouts = 0;
};

struct RolloutSet {
  int cwe_id = 0;
  std::vector<Rollout> rollouts;
};

// Pooled Beta(1,1) Bernoulli estimation over all rollouts; throws on empty
// input. Joint and confusion statistics cover only rollouts that carry a
// test verdict.
MetricsReport compute_metrics(const std::vector<RolloutSet>& sets);

struct RepairResult {
  Rollout rollout;
  int attempts = 0;
  bool unresolved = false;
};

// Regenerates with per-line findings appended to the task until the analyzer
// is clean or max_retries is exhausted.
RepairResult commit_time_repair(const Scenario& scenario, const std::string& system,
                                Generator& target, const AnalyzerFn& analyzer,
                                int max_retries = 36, std::uint64_t draw_base = 0);

// Mean leave-one-out smoothed BLEU over the corpus; requires >= 2 documents.
double self_bleu(const std::vector<std::string>& docs, int max_ngram = 4);

// Writes report.json, report.txt, and per_cwe.csv into the directory.
void write_report(const MetricsReport& report, const std::filesystem::path& dir,
                  std::optional<double> corpus_self_bleu = {});

Json to_json(const MetricsReport& report);

}  // namespace rcg
