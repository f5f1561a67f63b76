#include "sedrl/pipeline/clean.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sedrl::pipeline {

using sim::Split;

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty array");
  if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile out of [0,100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

long CleanReport::total() const {
  return std::accumulate(obs_removed.begin(), obs_removed.end(), 0L) +
         std::accumulate(dose_removed.begin(), dose_removed.end(), 0L);
}

namespace {

CleaningRule rule_for_feature(int f) {
  if (f == 7) return {std::nullopt, 99.9};                 // urine output, upper only
  if (f < 7) return {std::optional<double>(0.05), 99.95};  // vitals
  return {std::optional<double>(0.1), 99.9};               // labs
}

}  // namespace

CleanReport quantile_clean(sim::Cohort& cohort) {
  // Collect training-split values per channel.
  std::vector<std::vector<double>> obs_vals(sim::kNumQuant);
  std::vector<std::vector<double>> dose_vals(sim::kNumActions);
  for (const auto& traj : cohort.stays) {
    const auto it = cohort.split.find(traj.stay_id);
    if (it == cohort.split.end() || it->second != Split::kTrain) continue;
    for (const auto& step : traj.steps) {
      for (int f = 0; f < sim::kNumQuant; ++f)
        if (!sim::is_missing(step.obs(f))) obs_vals[f].push_back(step.obs(f));
      for (int k = 0; k < sim::kNumActions; ++k) dose_vals[k].push_back(step.action(k));
    }
  }
  if (obs_vals[0].empty()) throw std::runtime_error("quantile_clean: no training split");

  struct Bounds {
    double lo, hi;
    bool has_lo;
  };
  std::vector<Bounds> obs_bounds(sim::kNumQuant);
  for (int f = 0; f < sim::kNumQuant; ++f) {
    const CleaningRule rule = rule_for_feature(f);
    obs_bounds[f].has_lo = rule.lower_pct.has_value();
    obs_bounds[f].lo = rule.lower_pct ? percentile(obs_vals[f], *rule.lower_pct) : 0.0;
    obs_bounds[f].hi = percentile(obs_vals[f], rule.upper_pct);
  }
  std::vector<double> dose_hi(sim::kNumActions);
  for (int k = 0; k < sim::kNumActions; ++k) dose_hi[k] = percentile(dose_vals[k], 99.0);

  CleanReport report;
  for (auto& traj : cohort.stays) {
    for (auto& step : traj.steps) {
      for (int f = 0; f < sim::kNumQuant; ++f) {
        const float v = step.obs(f);
        if (sim::is_missing(v)) continue;
        if (v > obs_bounds[f].hi || (obs_bounds[f].has_lo && v < obs_bounds[f].lo)) {
          step.obs(f) = std::nanf("");
          ++report.obs_removed[f];
        }
      }
      for (int k = 0; k < sim::kNumActions; ++k) {
        if (step.action(k) > dose_hi[k]) {
          step.action(k) = 0.0f;
          ++report.dose_removed[k];
        }
      }
    }
  }
  return report;
}

}  // namespace sedrl::pipeline
