#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rcg/analysis.hpp"
#include "rcg/corpus.hpp"
#include "rcg/modelio.hpp"
#include "rcg/rollout.hpp"
#include "rcg/stats.hpp"

namespace rcg {

enum class ChainPhase { BurnIn, Sample };

struct ChainEntry {
  std::string prompt;
  int num_failures = 0;
  int num_successes = 0;
  bool accepted = false;
  ChainPhase phase = ChainPhase::Sample;
  // False for proposals rejected before evaluation (leak filter) and for
  // entries whose estimation failed; note carries the reason.
  bool evaluated = true;
  std::string note;

  double posterior_mean() const {
    return (1.0 + num_failures) / (2.0 + num_failures + num_successes);
  }
};

struct ChainState {
  std::string current_prompt;
  BetaPosterior current_estimate;
  int step = 0;
  int accepted_count = 0;
  std::vector<ChainEntry> history;
};

struct McmcConfig {
  int burn_in = 3;
  int steps = 32;
  EstimatorConfig estimator;
  std::uint64_t rng_seed = 0;
  std::string language = "Python";
};

// Symmetric-kernel Metropolis acceptance: min(1, p_proposed / p_current).
double acceptance_probability(double p_current, double p_proposed);

struct ProposalResult {
  std::string text;
  bool duplicate = false;
};

// One rephrasing-kernel draw; retries once when the kernel echoes its input
// byte for byte, then accepts the duplicate with a logged notice.
ProposalResult propose_rephrase(const std::string& prompt, Generator& kernel,
                                std::uint64_t draw_index);

// Single Metropolis-Hastings transition. Proposals that leak the weakness
// (hotword/CWE filter against `record`) are rejected without evaluation;
// estimation failures leave the chain position unchanged.
void mh_step(ChainState& state, Generator& kernel, Generator& target,
             const AnalyzerFn& analyzer, const CweRecord& record, const McmcConfig& cfg);

struct ChainRecord {
  std::string type;  // analyzer rule id that made the seed vulnerable
  std::string seed;
  int cwe_id = 0;
  std::vector<ChainEntry> entries;
  int turns = 0;
  int burn_in = 0;
  double beta_variance_threshold = 0.015;
};

// Burn-in plus sampling steps from the seed scenario. Passing a partial
// history resumes deterministically from its length.
ChainRecord run_chain(const Scenario& seed_scenario, const BetaPosterior& seed_estimate,
                      const std::string& seed_rule, Generator& kernel, Generator& target,
                      const AnalyzerFn& analyzer, const CweRecord& record,
                      const McmcConfig& cfg,
                      const std::vector<ChainEntry>* resume_history = nullptr);

Json to_json(const ChainRecord& record);
ChainRecord chain_record_from_json(const Json& j);

}  // namespace rcg
