#pragma once

#include <cstdint>

#include "sedrl/pipeline/gbm.hpp"
#include "sedrl/sim/cohort.hpp"

namespace sedrl::pipeline {

struct MiceConfig {
  int rounds = 5;
  // Regression fits subsample the training rows beyond this cap to bound
  // runtime; predictions still cover every missing cell.
  int max_fit_rows = 4000;
  GbmConfig gbm{};
};

// Chained-equation imputation, single-chain variant: missing cells start at
// training-split medians, then each round refits a boosted-tree regression
// per feature (ascending missingness order) and overwrites its missing
// cells. Observed cells are never touched. Deterministic given the seed,
// which only drives fit-row subsampling.
void mice_impute(sim::Cohort& cohort, const MiceConfig& config, std::uint64_t seed);

// Baseline for imputation-quality comparisons: training-split median fill.
void median_impute(sim::Cohort& cohort);

}  // namespace sedrl::pipeline
