#include "nervus/eval/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "nervus/error.hpp"

namespace nervus::metrics {
namespace {

void validate(std::span<const SurvivalRecord> records) {
  for (const SurvivalRecord& r : records) {
    if (r.event != 0 && r.event != 1) throw Error("survival record event must be 0 or 1");
    if (!(r.period > 0.0)) throw Error("survival record period must be positive");
  }
}

// Fenwick tree over risk ranks, counting inserted subjects.
class RankCounter {
 public:
  explicit RankCounter(std::size_t n) : tree_(n + 1, 0) {}
  void insert(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Number of inserted ranks strictly below `rank`.
  std::size_t below(std::size_t rank) const {
    std::size_t total = 0;
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) total += tree_[i];
    return total;
  }

 private:
  std::vector<std::size_t> tree_;
};

}  // namespace

double KmCurve::at(double t) const {
  double s = 1.0;
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) s = survival[k];
  return s;
}

KmCurve kaplan_meier(std::span<const SurvivalRecord> records) {
  validate(records);
  std::vector<SurvivalRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const SurvivalRecord& a, const SurvivalRecord& b) { return a.period < b.period; });
  KmCurve curve;
  double s = 1.0;
  std::size_t at_risk = sorted.size();
  for (std::size_t start = 0; start < sorted.size();) {
    std::size_t stop = start;
    std::size_t deaths = 0;
    while (stop < sorted.size() && sorted[stop].period == sorted[start].period) {
      deaths += static_cast<std::size_t>(sorted[stop].event);
      ++stop;
    }
    if (deaths > 0) {
      s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      curve.times.push_back(sorted[start].period);
      curve.survival.push_back(s);
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(deaths);
    }
    at_risk -= stop - start;
    start = stop;
  }
  return curve;
}

double chi2_sf_1df(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

LogRankResult log_rank(std::span<const SurvivalRecord> group_a,
                       std::span<const SurvivalRecord> group_b) {
  if (group_a.empty() || group_b.empty()) throw Error("log_rank: both groups must be non-empty");
  validate(group_a);
  validate(group_b);

  struct Tagged {
    double period;
    int event;
    bool in_a;
  };
  std::vector<Tagged> pooled;
  for (const auto& r : group_a) pooled.push_back({r.period, r.event, true});
  for (const auto& r : group_b) pooled.push_back({r.period, r.event, false});
  std::sort(pooled.begin(), pooled.end(), [](const Tagged& x, const Tagged& y) { return x.period < y.period; });

  double at_risk_a = static_cast<double>(group_a.size());
  double at_risk = static_cast<double>(pooled.size());
  double observed_minus_expected = 0.0;
  double variance = 0.0;
  std::size_t total_events = 0;
  for (std::size_t start = 0; start < pooled.size();) {
    std::size_t stop = start;
    double deaths = 0.0, deaths_a = 0.0, leaving = 0.0, leaving_a = 0.0;
    while (stop < pooled.size() && pooled[stop].period == pooled[start].period) {
      deaths += pooled[stop].event;
      if (pooled[stop].in_a) {
        deaths_a += pooled[stop].event;
        leaving_a += 1.0;
      }
      leaving += 1.0;
      ++stop;
    }
    if (deaths > 0.0) {
      total_events += static_cast<std::size_t>(deaths);
      const double share = at_risk_a / at_risk;
      observed_minus_expected += deaths_a - deaths * share;
      if (at_risk > 1.0) {
        variance += deaths * share * (1.0 - share) * (at_risk - deaths) / (at_risk - 1.0);
      }
    }
    at_risk -= leaving;
    at_risk_a -= leaving_a;
    start = stop;
  }
  if (total_events == 0) throw Error("log_rank: no events in either group");

  LogRankResult result;
  if (variance <= 0.0) return result;
  result.statistic = observed_minus_expected * observed_minus_expected / variance;
  result.p_value = std::max(chi2_sf_1df(result.statistic), std::numeric_limits<double>::min());
  return result;
}

double c_index(std::span<const SurvivalRecord> records) {
  validate(records);
  const std::size_t n = records.size();

  // Dense risk ranks so equal risks compare equal.
  std::vector<double> risks(n);
  for (std::size_t i = 0; i < n; ++i) risks[i] = records[i].risk;
  std::vector<double> distinct = risks;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), risks[i]) -
                                       distinct.begin());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].period > records[b].period; });

  // Sweep from the longest period down; the counter holds every subject with a
  // strictly longer period than the current tie group.
  RankCounter later(distinct.size());
  std::uint64_t comparable = 0, doubled_score = 0;
  std::size_t inserted = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && records[order[stop]].period == records[order[start]].period) ++stop;
    for (std::size_t k = start; k < stop; ++k) {
      const std::size_t i = order[k];
      if (!records[i].event) continue;
      const std::size_t lower = later.below(rank[i]);
      const std::size_t lower_or_equal = later.below(rank[i] + 1);
      comparable += inserted;
      doubled_score += 2 * lower + (lower_or_equal - lower);
    }
    for (std::size_t k = start; k < stop; ++k) later.insert(rank[order[k]]);
    inserted += stop - start;
    start = stop;
  }
  if (comparable == 0) throw Error("c_index: no comparable pairs");
  return static_cast<double>(doubled_score) / (2.0 * static_cast<double>(comparable));
}

}  // namespace nervus::metrics
