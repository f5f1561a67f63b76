#include "sedrl/pipeline/pipeline.hpp"

namespace sedrl::pipeline {

PreprocessResult run_preprocess(sim::Cohort& cohort, const PreprocessConfig& config) {
  PreprocessResult result;
  if (!cohort.med_records.empty()) apply_med_conversions(cohort);
  split_cohort(cohort, config.split_fractions, config.seed);
  result.clean_report = quantile_clean(cohort);
  sample_and_hold(cohort);
  mice_impute(cohort, config.mice, config.seed);
  result.scaler = standardize_features(cohort);
  return result;
}

}  // namespace sedrl::pipeline
