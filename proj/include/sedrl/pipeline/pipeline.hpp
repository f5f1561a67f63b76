#pragma once

#include <cstdint>

#include "sedrl/pipeline/clean.hpp"
#include "sedrl/pipeline/convert.hpp"
#include "sedrl/pipeline/hold.hpp"
#include "sedrl/pipeline/mice.hpp"
#include "sedrl/pipeline/scale.hpp"
#include "sedrl/pipeline/split.hpp"

namespace sedrl::pipeline {

struct PreprocessConfig {
  std::array<double, 3> split_fractions = kDefaultSplit;
  MiceConfig mice{};
  std::uint64_t seed = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GbmConfig, trees, depth, shrinkage, min_leaf)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MiceConfig, rounds, max_fit_rows, gbm)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PreprocessConfig, split_fractions, mice, seed)

struct PreprocessResult {
  Scaler scaler;
  CleanReport clean_report;
};

// Full chain: medication unit conversion, patient-disjoint splitting,
// quantile cleaning with training-split bounds, sample-and-hold,
// chained-equation imputation, feature standardization. Mutates the cohort
// into its model-ready scaled form.
PreprocessResult run_preprocess(sim::Cohort& cohort, const PreprocessConfig& config);

}  // namespace sedrl::pipeline
