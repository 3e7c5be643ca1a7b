#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nervus::metrics {

struct SurvivalRecord {
  double risk = 0.0;   // model output: learned log-hazard ratio
  int event = 0;       // 1 = event observed, 0 = censored
  double period = 0.0; // time to event or censoring, > 0
};

// Product-limit estimate evaluated at the distinct event times.
struct KmCurve {
  std::vector<double> times;
  std::vector<double> survival;      // S just after times[k]
  std::vector<std::size_t> at_risk;  // n_k
  std::vector<std::size_t> events;   // d_k

  /// S(t); 1 before the first event time.
  double at(double t) const;
};

KmCurve kaplan_meier(std::span<const SurvivalRecord> records);

struct LogRankResult {
  double statistic = 0.0;  // chi-square, 1 degree of freedom
  double p_value = 1.0;
};

/// Two-sample log-rank test. Throws Error on an empty group or when neither
/// group has an event. A zero total variance yields statistic 0, p 1.
LogRankResult log_rank(std::span<const SurvivalRecord> group_a,
                       std::span<const SurvivalRecord> group_b);

/// Upper tail of the chi-square distribution with one degree of freedom,
/// erfc(sqrt(x / 2)).
double chi2_sf_1df(double x);

// Harrell's concordance: pairs (i, j) with period_i < period_j and event_i = 1
// are comparable; concordant when risk_i > risk_j; risk ties count 0.5.
// Throws Error when there is no comparable pair.
double c_index(std::span<const SurvivalRecord> records);

}  // namespace nervus::metrics
