#pragma once
// Evaluation arithmetic: pass@k, token savings and time aggregation.
//
// pass@k uses the unbiased estimator 1 - C(n-c, k) / C(n, k): the probability
// that a uniformly drawn k-subset of n attempts contains at least one of the c
// successful ones. This is the estimator that reproduces the published
// Pass@1/Pass@5 cells (for example n=10, c=4, k=5 gives 0.976).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hivegen/core/model.hpp"

namespace hivegen::metrics {

/// Exact binomial coefficient; throws Error(Domain) when it exceeds 64 bits.
std::uint64_t binomial(int n, int k);

/// Exact value of pass@k as numerator / denominator, both reduced.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
};
Fraction pass_at_k_exact(int n, int c, int k);

/// Throws Error(Domain) unless 0 <= c <= n and 1 <= k <= n (n <= 64).
double pass_at_k(int n, int c, int k);

/// 100 * (baseline - ours) / baseline. Throws Error(Domain) if baseline <= 0.
double token_savings(double baseline_tokens, double ours_tokens);

/// Fixed-point rendering ("30.97", "-30.00", "0.976").
std::string format_fixed(double value, int decimals);

struct TrialRecord {
  std::string design;
  int n = 0;
  int c = 0;
  std::vector<double> times;               // seconds, one per trial
  std::map<std::string, double> stages;    // seconds per pipeline stage
  TokenUsage tokens;
};

struct TimeReport {
  std::size_t trials = 0;
  double mean = 0;
  double median = 0;
  std::map<std::string, double> stage_mean;  // mean over records carrying the stage
  [[nodiscard]] bool empty() const { return trials == 0; }
};

TimeReport aggregate_times(const std::vector<TrialRecord>& records);

/// metrics.json body: {design, n, c, pass_at: {"1": .., "5": ..}, tokens, times, stages}.
/// pass_at entries whose k exceeds n are null.
nlohmann::json to_metrics_json(const TrialRecord& r);
TrialRecord from_metrics_json(const nlohmann::json& j);

nlohmann::json to_json(const TimeReport& r);

}  // namespace hivegen::metrics
