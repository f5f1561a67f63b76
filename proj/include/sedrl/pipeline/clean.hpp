#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sedrl/sim/cohort.hpp"

namespace sedrl::pipeline {

// Percentile bounds for one feature class; a disengaged lower bound means
// upper-tail-only cleaning.
struct CleaningRule {
  std::optional<double> lower_pct;
  double upper_pct = 100.0;
};

// Linear-interpolation percentile (index p/100 * (n-1) on the sorted array).
double percentile(std::vector<double> values, double p);

struct CleanReport {
  std::array<long, sim::kNumObs> obs_removed{};
  std::array<long, sim::kNumActions> dose_removed{};
  long total() const;
};

// Marks training-split-percentile outliers missing. Vitals are cut at
// (0.05, 99.95), labs at (0.1, 99.9), urine output above 99.9, doses above
// 99. Deleted doses become zero (an unrecorded administration is treated as
// no administration); deleted observations flow into imputation.
CleanReport quantile_clean(sim::Cohort& cohort);

}  // namespace sedrl::pipeline
