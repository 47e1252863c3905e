#include "rcg/stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace rcg {
namespace {

// Continued fraction for I_x(a,b), Lentz's method.
double beta_cont_frac(double a, double b, double x) {
  constexpr int kMaxTerms = 200;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // The continued fraction converges fast only on one side of the mean.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cont_frac(a, b, x) / a;
  return 1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b;
}

double beta_quantile(double a, double b, double p) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (incomplete_beta(a, b, mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double BetaPosterior::mean() const { return alpha() / (alpha() + beta()); }

double BetaPosterior::variance() const {
  const double a = alpha();
  const double b = beta();
  const double s = a + b;
  return a * b / (s * s * (s + 1.0));
}

std::pair<double, double> BetaPosterior::credible_interval(double mass) const {
  const double tail = 0.5 * (1.0 - mass);
  return {beta_quantile(alpha(), beta(), tail), beta_quantile(alpha(), beta(), 1.0 - tail)};
}

bool BetaPosterior::converged(const EstimatorConfig& cfg) const {
  return variance() < cfg.variance_threshold && total() >= cfg.min_rollouts;
}

EstimateResult estimate_failure_rate(
    const std::function<std::string(int)>& rollout,
    const std::function<bool(const std::string&)>& adjudicate,
    const EstimatorConfig& cfg) {
  EstimateResult result;
  int i = 0;
  while (result.posterior.total() < cfg.max_rollouts &&
         !result.posterior.converged(cfg)) {
    std::string completion;
    try {
      completion = rollout(i++);
    } catch (const std::exception& e) {
      throw EstimateAborted(std::string("rollout failed: ") + e.what(), std::move(result));
    }
    const bool failed = adjudicate(completion);
    if (failed)
      ++result.posterior.failures;
    else
      ++result.posterior.successes;
    result.draws.push_back({std::move(completion), failed});
  }
  return result;
}

std::vector<std::string> bleu_tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

}  // namespace

double bleu_score(const std::string& candidate,
                  const std::vector<std::string>& references, int max_ngram) {
  if (references.empty()) throw std::invalid_argument("bleu_score: no references");
  const auto cand = bleu_tokenize(candidate);
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(bleu_tokenize(r));

  // Brevity penalty uses the reference length closest to the candidate,
  // breaking ties toward the shorter reference.
  size_t closest = refs.front().size();
  for (const auto& r : refs) {
    const auto diff = [&](size_t len) {
      return len > cand.size() ? len - cand.size() : cand.size() - len;
    };
    if (diff(r.size()) < diff(closest) || (diff(r.size()) == diff(closest) && r.size() < closest))
      closest = r.size();
  }
  double bp = 1.0;
  if (cand.size() < closest) {
    if (cand.empty()) return 0.0;
    bp = std::exp(1.0 - static_cast<double>(closest) / static_cast<double>(cand.size()));
  }

  double log_precision_sum = 0.0;
  for (int n = 1; n <= max_ngram; ++n) {
    const auto cand_counts = count_ngrams(cand, n);
    NgramCounts max_ref_counts;
    for (const auto& r : refs)
      for (const auto& [gram, cnt] : count_ngrams(r, n))
        max_ref_counts[gram] = std::max(max_ref_counts[gram], cnt);
    long long clipped = 0;
    long long total = 0;
    for (const auto& [gram, cnt] : cand_counts) {
      total += cnt;
      auto it = max_ref_counts.find(gram);
      if (it != max_ref_counts.end()) clipped += std::min(cnt, it->second);
    }
    const double p = (static_cast<double>(clipped) + 1.0) / (static_cast<double>(total) + 1.0);
    log_precision_sum += std::log(p);
  }
  return bp * std::exp(log_precision_sum / max_ngram);
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += std::fabs(p[i] - q[i]);
  return 0.5 * acc;
}

}  // namespace rcg
