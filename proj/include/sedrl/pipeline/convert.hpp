#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sedrl/sim/cohort.hpp"

namespace sedrl::pipeline {

// Multiplicative factors into a target equivalent unit. The target drug
// itself carries an identity factor.
struct ConversionTable {
  std::map<std::string, double> factors;

  double factor(const std::string& drug) const;  // throws on unknown drug
};

// Defaults from standard equianalgesic references (configurable).
ConversionTable default_opioid_table();  // -> oral morphine equivalent mg
ConversionTable default_benzo_table();   // -> midazolam equivalent mg

// Key: (stay_id, hour) -> combined converted dose for that hour.
using HourlyDoses = std::map<std::pair<std::int64_t, int>, double>;

HourlyDoses convert_opioids(const std::vector<sim::MedRecord>& records,
                            const ConversionTable& table = default_opioid_table());
HourlyDoses convert_benzos(const std::vector<sim::MedRecord>& records,
                           const ConversionTable& table = default_benzo_table());

double normalize_weight_based(double dose_mg, double weight_kg);

// Rebuilds the opioid and benzodiazepine action columns of every stay from
// the raw medication records (hours without a record become zero dose).
void apply_med_conversions(sim::Cohort& cohort,
                           const ConversionTable& opioids = default_opioid_table(),
                           const ConversionTable& benzos = default_benzo_table());

}  // namespace sedrl::pipeline
