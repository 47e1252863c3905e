#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rcg {

// Regularized incomplete beta function I_x(a, b), evaluated by Lentz's
// continued fraction capped at 200 terms.
double incomplete_beta(double a, double b, double x);

// Inverse of incomplete_beta in x, by bisection on [0, 1].
double beta_quantile(double a, double b, double p);

struct EstimatorConfig {
  double variance_threshold = 0.015;
  int min_rollouts = 0;
  int max_rollouts = 64;
};

// Posterior over a Bernoulli failure probability under a Beta(1,1) prior.
struct BetaPosterior {
  int failures = 0;
  int successes = 0;

  double alpha() const { return 1.0 + failures; }
  double beta() const { return 1.0 + successes; }
  int total() const { return failures + successes; }
  double mean() const;
  double variance() const;
  // Equal-tailed credible interval containing `mass` posterior probability.
  std::pair<double, double> credible_interval(double mass = 0.95) const;
  // Convergence is evaluated after each observation is folded in.
  bool converged(const EstimatorConfig& cfg) const;
};

struct DrawRecord {
  std::string completion;
  bool failed = false;
};

struct EstimateResult {
  BetaPosterior posterior;
  std::vector<DrawRecord> draws;
};

// Thrown when the rollout callable fails mid-estimation; carries the draws
// accumulated before the failure.
struct EstimateAborted : std::runtime_error {
  EstimateAborted(const std::string& what, EstimateResult progress)
      : std::runtime_error(what), partial(std::move(progress)) {}
  EstimateResult partial;
};

// Adaptive failure-rate estimation: draws completions (rollout receives the
// local draw index) and folds adjudications into the posterior until it
// converges or max_rollouts is reached.
EstimateResult estimate_failure_rate(
    const std::function<std::string(int)>& rollout,
    const std::function<bool(const std::string&)>& adjudicate,
    const EstimatorConfig& cfg);

// Smoothed BLEU of one candidate against reference documents: uniform weights
// over 1..max_ngram, add-one smoothing on modified precisions, brevity penalty
// against the closest reference length (ties resolved toward the shorter).
double bleu_score(const std::string& candidate,
                  const std::vector<std::string>& references,
                  int max_ngram = 4);

// Case-preserving token split on every non-alphanumeric character.
std::vector<std::string> bleu_tokenize(const std::string& text);

// Total variation distance between two discrete distributions of equal size.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace rcg
