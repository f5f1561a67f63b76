#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedrl/nn/types.hpp"
#include "sedrl/sim/config.hpp"

namespace sedrl::sim {

using nn::Vec;

// One hourly step of a stay. Missing observation cells are NaN; doses are
// administrations and always present.
struct Step {
  Vec obs;     // kNumObs
  Vec action;  // kNumActions
};

struct Trajectory {
  std::int64_t stay_id = 0;
  std::int64_t patient_id = 0;
  std::vector<Step> steps;
  int mortality = 0;  // death in-stay or within 30 simulated days after discharge

  int length() const { return static_cast<int>(steps.size()); }
  double cumulative_pain() const;
};

// Raw medication administration, the pre-conversion form of the action
// channels (opioids and benzodiazepines only; propofol and dexmedetomidine
// are logged directly in weight-normalized units).
struct MedRecord {
  std::int64_t stay_id = 0;
  int hour = 0;
  std::string drug;
  double dose_mg = 0.0;
};

enum class Split { kUnassigned = -1, kTrain = 0, kValidation = 1, kTest = 2 };

struct Cohort {
  std::vector<Trajectory> stays;
  std::vector<MedRecord> med_records;
  std::map<std::int64_t, int> comorbidity;      // patient_id -> score
  std::map<std::int64_t, double> weight_kg;     // patient_id -> kg
  std::map<std::int64_t, Split> split;          // stay_id -> split label
  std::uint64_t seed = 0;
  nlohmann::json config;  // generator config echo

  std::vector<std::int64_t> patient_ids() const;
  std::size_t total_steps() const;
};

bool is_missing(float v);

// Cohort CSV: one row per stay-hour with empty fields for missing cells,
// plus a JSON sidecar carrying config, seed and per-patient covariates.
void write_cohort_csv(const Cohort& cohort, const std::string& csv_path);
void write_cohort_sidecar(const Cohort& cohort, const std::string& json_path);
void write_med_records_csv(const Cohort& cohort, const std::string& csv_path);

Cohort read_cohort_csv(const std::string& csv_path, const std::string& sidecar_path);
std::vector<MedRecord> read_med_records_csv(const std::string& csv_path);

}  // namespace sedrl::sim
