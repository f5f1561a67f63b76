#include "sedrl/pipeline/convert.hpp"

#include <stdexcept>

namespace sedrl::pipeline {

double ConversionTable::factor(const std::string& drug) const {
  const auto it = factors.find(drug);
  if (it == factors.end()) throw std::invalid_argument("unknown drug: " + drug);
  if (it->second <= 0.0) throw std::invalid_argument("non-positive factor for " + drug);
  return it->second;
}

ConversionTable default_opioid_table() {
  // IV fentanyl mg x300, IV hydromorphone mg x20, IV morphine mg x3.
  return {{{"morphine", 3.0}, {"fentanyl", 300.0}, {"hydromorphone", 20.0},
           {"oral_morphine", 1.0}}};
}

ConversionTable default_benzo_table() {
  // Diazepam converts in two hops: x0.2 to lorazepam-eq, then x2 to
  // midazolam-eq; the table stores the composed product.
  return {{{"midazolam", 1.0}, {"lorazepam", 2.0}, {"diazepam", 0.2 * 2.0}}};
}

namespace {

HourlyDoses convert(const std::vector<sim::MedRecord>& records, const ConversionTable& table) {
  HourlyDoses out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.dose_mg < 0.0)
      throw std::invalid_argument("negative dose in record " + std::to_string(i));
    double f;
    try {
      f = table.factor(r.drug);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " (record " + std::to_string(i) + ")");
    }
    out[{r.stay_id, r.hour}] += r.dose_mg * f;
  }
  return out;
}

}  // namespace

HourlyDoses convert_opioids(const std::vector<sim::MedRecord>& records,
                            const ConversionTable& table) {
  return convert(records, table);
}

HourlyDoses convert_benzos(const std::vector<sim::MedRecord>& records,
                           const ConversionTable& table) {
  return convert(records, table);
}

double normalize_weight_based(double dose_mg, double weight_kg) {
  if (weight_kg <= 0.0) throw std::domain_error("normalize_weight_based: weight <= 0");
  return dose_mg / weight_kg;
}

void apply_med_conversions(sim::Cohort& cohort, const ConversionTable& opioids,
                           const ConversionTable& benzos) {
  std::vector<sim::MedRecord> op_records, benzo_records;
  for (const auto& r : cohort.med_records) {
    if (opioids.factors.count(r.drug))
      op_records.push_back(r);
    else if (benzos.factors.count(r.drug))
      benzo_records.push_back(r);
    else
      throw std::invalid_argument("unknown drug: " + r.drug);
  }
  const HourlyDoses ome = convert_opioids(op_records, opioids);
  const HourlyDoses midaz = convert_benzos(benzo_records, benzos);

  for (auto& traj : cohort.stays) {
    for (int t = 0; t < traj.length(); ++t) {
      const auto op = ome.find({traj.stay_id, t});
      traj.steps[t].action(sim::kOpioid) =
          op == ome.end() ? 0.0f : static_cast<float>(op->second);
      const auto bz = midaz.find({traj.stay_id, t});
      traj.steps[t].action(sim::kBenzo) =
          bz == midaz.end() ? 0.0f : static_cast<float>(bz->second);
    }
  }
}

}  // namespace sedrl::pipeline
