#include "hivegen/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hivegen/core/error.hpp"
#include "hivegen/core/json_io.hpp"

namespace hivegen::metrics {

namespace {

using u128 = unsigned __int128;

void check_args(int n, int c, int k) {
  if (n < 1 || n > 64) throw Error(ErrorCode::Domain, "pass@k requires 1 <= n <= 64, got n=" + std::to_string(n));
  if (c < 0 || c > n) throw Error(ErrorCode::Domain, "pass@k requires 0 <= c <= n, got c=" + std::to_string(c));
  if (k < 1 || k > n) throw Error(ErrorCode::Domain, "pass@k requires 1 <= k <= n, got k=" + std::to_string(k));
}

}  // namespace

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  u128 r = 1;
  for (int i = 0; i < k; ++i) {
    r = r * static_cast<u128>(n - i) / static_cast<u128>(i + 1);
    if (r > static_cast<u128>(UINT64_MAX)) throw Error(ErrorCode::Domain, "binomial overflow");
  }
  return static_cast<std::uint64_t>(r);
}

Fraction pass_at_k_exact(int n, int c, int k) {
  check_args(n, c, k);
  if (n - c < k) return {1, 1};
  std::uint64_t total = binomial(n, k);
  std::uint64_t miss = binomial(n - c, k);
  std::uint64_t num = total - miss;
  std::uint64_t g = std::gcd(num, total);
  if (g == 0) return {0, 1};
  return {num / g, total / g};
}

double pass_at_k(int n, int c, int k) {
  auto f = pass_at_k_exact(n, c, k);
  return static_cast<double>(f.num) / static_cast<double>(f.den);
}

double token_savings(double baseline, double ours) {
  if (!(baseline > 0)) throw Error(ErrorCode::Domain, "token_savings requires baseline > 0");
  return 100.0 * (baseline - ours) / baseline;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  // "-0.00" is reported as "0.00"
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

TimeReport aggregate_times(const std::vector<TrialRecord>& records) {
  TimeReport out;
  std::vector<double> all;
  for (const auto& r : records) all.insert(all.end(), r.times.begin(), r.times.end());
  if (all.empty()) return out;
  out.trials = all.size();
  out.mean = std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
  std::sort(all.begin(), all.end());
  std::size_t mid = all.size() / 2;
  out.median = all.size() % 2 ? all[mid] : (all[mid - 1] + all[mid]) / 2.0;
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : records)
    for (const auto& [stage, secs] : r.stages) {
      acc[stage].first += secs;
      acc[stage].second += 1;
    }
  for (const auto& [stage, sum] : acc) out.stage_mean[stage] = sum.first / sum.second;
  return out;
}

nlohmann::json to_metrics_json(const TrialRecord& r) {
  nlohmann::json pass = nlohmann::json::object();
  for (int k : {1, 5}) {
    if (r.n >= k) pass[std::to_string(k)] = pass_at_k(r.n, r.c, k);
    else pass[std::to_string(k)] = nullptr;
  }
  return nlohmann::json{{"design", r.design}, {"n", r.n},           {"c", r.c},
                        {"pass_at", pass},    {"tokens", r.tokens}, {"times", r.times},
                        {"stages", r.stages}};
}

TrialRecord from_metrics_json(const nlohmann::json& j) {
  TrialRecord r;
  r.design = j.value("design", std::string());
  r.n = j.value("n", 0);
  r.c = j.value("c", 0);
  r.times = j.value("times", std::vector<double>{});
  r.stages = j.value("stages", std::map<std::string, double>{});
  if (j.contains("tokens")) r.tokens = j.at("tokens").get<TokenUsage>();
  return r;
}

nlohmann::json to_json(const TimeReport& r) {
  return nlohmann::json{{"trials", r.trials}, {"mean", r.mean}, {"median", r.median},
                        {"stages", r.stage_mean}};
}

}  // namespace hivegen::metrics
