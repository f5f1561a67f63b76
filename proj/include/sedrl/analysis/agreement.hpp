#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sedrl/analysis/stats.hpp"
#include "sedrl/nn/types.hpp"
#include "sedrl/sim/config.hpp"

namespace sedrl::analysis {

using ActionMax = std::array<double, sim::kNumActions>;

// Per-stay agreement between recorded and proposed dosing. The overall
// score is one minus the mean absolute dose deviation, normalized per
// action by the test-set maximum, averaged over actions and hours; it is
// exactly the mean of the per-action components.
struct AgreementRecord {
  std::int64_t stay_id = 0;
  double overall = 0.0;
  std::array<double, sim::kNumActions> per_action{};
  double cumulative_pain = 0.0;
  int mortality = 0;
  int comorbidity = 0;
  // Mean of (proposed - recorded) / a_max per action: positive = over-dosing.
  std::array<double, sim::kNumActions> signed_deviation{};
};

// recorded[t] and proposed[t] are dose vectors for hour t. An action whose
// a_max is zero was never administered in the test set; it contributes zero
// deviation (agreement 1) and a warning on stderr.
AgreementRecord agreement_score(const std::vector<nn::Vec>& recorded,
                                const std::vector<nn::Vec>& proposed, const ActionMax& a_max);

enum class Outcome { kMortalityRate, kMeanCumulativePain };

struct BinRow {
  double center = 0.0;
  double value = 0.0;
  double stddev = 0.0;  // pain only; 0 for mortality rates
  int count = 0;
  bool low_confidence = false;  // fewer than 5 cases
};

// Equal-width bins over the observed agreement range; empty bins omitted.
std::vector<BinRow> binned_outcomes(const std::vector<AgreementRecord>& records,
                                    int bin_count, Outcome outcome);

// Spearman correlation between comorbidity score and the signed dose
// deviation for one action, with a bootstrap CI.
CorrelationEstimate deviation_vs_comorbidity(const std::vector<AgreementRecord>& records,
                                             int action, int n_resamples, std::uint64_t seed);

}  // namespace sedrl::analysis
