#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcg/corpus.hpp"
#include "rcg/modelio.hpp"
#include "rcg/rollout.hpp"
#include "rcg/stats.hpp"
#include "rcg/util.hpp"

namespace rcg {

// One scenario's run inside a CWE record: either an accepted scenario with
// its frozen tests and rollouts, or a rejected candidate kept for the audit
// trail.
struct ScenarioRun {
  Scenario scenario;
  std::string tests;
  std::vector<Rollout> rollouts;
  bool retained = false;
  bool errored = false;
  std::string split;             // train | eval (empty for rejected)
  std::string rejection_reason;  // empty for accepted scenarios
};

struct CweRun {
  int cwe_id = 0;
  std::string cwe_description;
  std::string timestamp;
  std::string model;
  std::string test_model;
  std::vector<ScenarioRun> scenarios;
};

Json to_json(const CweRun& run);
CweRun cwe_run_from_json(const Json& j);

struct BenignifyOutcome {
  std::optional<Scenario> scenario;
  std::string rejection_reason;  // "no-library" | "hotword-leak" when rejected
};

// Produces >= n candidate tasks through the scenario-extraction template,
// seeded with a fixed worked demonstration plus descriptions of the record's
// example snippets.
std::vector<std::string> generate_candidate_tasks(const CweRecord& record, int n,
                                                  Generator& generator,
                                                  std::uint64_t draw_base = 0);

// Strip -> library grounding -> leakage check (with one re-strip attempt).
BenignifyOutcome benignify(const std::string& task, const CweRecord& record,
                           Generator& generator, const util::Clock& clock,
                           std::uint64_t draw_base = 0);

struct FalsifyParams {
  int n_scenarios = 5;
  int k_rollouts = 10;
  std::string language = "Python";
  std::string model;
  std::string test_model;
  EstimatorConfig estimator;
  util::Clock clock;
};

// Full stage-1 pass for one weakness class: candidate generation, filtering,
// frozen test generation, k rollouts per scenario, analysis, execution, and
// the retention decision (kept iff any rollout is vulnerable).
CweRun falsify_cwe(const CweRecord& record, Generator& target, Generator& test_generator,
                   const AnalyzerFn& analyzer, const FalsifyParams& params);

}  // namespace rcg
