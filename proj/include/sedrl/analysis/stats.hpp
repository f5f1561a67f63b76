#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace sedrl::analysis {

// Zero rank variance: a rank correlation carries no information.
struct undefined_correlation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// More than half the bootstrap resamples had undefined correlations.
struct degenerate_data : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Average ranks: ties receive the mean of the rank range they occupy.
std::vector<double> average_ranks(const std::vector<double>& values);

// Spearman rank correlation: Pearson correlation of the average ranks.
// Requires n >= 3; throws undefined_correlation on zero rank variance.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationEstimate {
  double rho = 0.0;
  double ci_low = 0.0;   // 2.5th percentile of the bootstrap distribution
  double ci_high = 0.0;  // 97.5th
  int n_resamples = 1000;
  int n_cases = 0;
  int n_redrawn = 0;  // undefined-rho resamples that were redrawn

  bool excludes_zero() const { return ci_low > 0.0 || ci_high < 0.0; }
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CorrelationEstimate, rho, ci_low, ci_high,
                                                n_resamples, n_cases, n_redrawn)

// Percentile bootstrap over case resampling. The point estimate is computed
// on the full data. Resamples with undefined rho are redrawn; once the
// redraw count exceeds half of n_resamples the data are declared degenerate.
CorrelationEstimate bootstrap_ci(const std::vector<double>& x, const std::vector<double>& y,
                                 int n_resamples, std::uint64_t seed);

}  // namespace sedrl::analysis
