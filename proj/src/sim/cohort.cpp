#include "sedrl/sim/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sedrl/common/csv.hpp"

namespace sedrl::sim {

bool is_missing(float v) { return std::isnan(v); }

double Trajectory::cumulative_pain() const {
  double sum = 0;
  for (const auto& s : steps)
    if (!is_missing(s.obs(kPainIdx))) sum += s.obs(kPainIdx);
  return sum;
}

std::vector<std::int64_t> Cohort::patient_ids() const {
  std::vector<std::int64_t> ids;
  for (const auto& t : stays) ids.push_back(t.patient_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::size_t Cohort::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : stays) n += t.steps.size();
  return n;
}

void write_cohort_csv(const Cohort& cohort, const std::string& csv_path) {
  CsvWriter w(csv_path);
  std::vector<std::string> header{"stay_id", "patient_id", "hour"};
  for (const char* name : kObsNames) header.push_back(name);
  for (const char* name : kActionNames) header.push_back(name);
  header.push_back("mortality");
  w.row(header);

  for (const auto& traj : cohort.stays) {
    for (int t = 0; t < traj.length(); ++t) {
      std::vector<std::string> row;
      row.push_back(std::to_string(traj.stay_id));
      row.push_back(std::to_string(traj.patient_id));
      row.push_back(std::to_string(t));
      const auto& step = traj.steps[t];
      for (int f = 0; f < kNumObs; ++f)
        row.push_back(is_missing(step.obs(f)) ? "" : format_number(step.obs(f)));
      for (int a = 0; a < kNumActions; ++a) row.push_back(format_number(step.action(a)));
      row.push_back(std::to_string(traj.mortality));
      w.row(row);
    }
  }
}

void write_cohort_sidecar(const Cohort& cohort, const std::string& json_path) {
  nlohmann::json j;
  j["seed"] = cohort.seed;
  j["config"] = cohort.config;
  nlohmann::json comorb = nlohmann::json::object();
  for (const auto& [pid, score] : cohort.comorbidity) comorb[std::to_string(pid)] = score;
  j["comorbidity"] = comorb;
  nlohmann::json weight = nlohmann::json::object();
  for (const auto& [pid, kg] : cohort.weight_kg) weight[std::to_string(pid)] = kg;
  j["weight_kg"] = weight;
  if (!cohort.split.empty()) {
    nlohmann::json split = nlohmann::json::object();
    for (const auto& [sid, label] : cohort.split) split[std::to_string(sid)] = static_cast<int>(label);
    j["split"] = split;
  }
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw std::runtime_error("cohort: cannot write " + json_path);
  out << j.dump(2) << '\n';
}

void write_med_records_csv(const Cohort& cohort, const std::string& csv_path) {
  CsvWriter w(csv_path);
  w.row({"stay_id", "hour", "drug", "dose_mg"});
  for (const auto& r : cohort.med_records)
    w.row({std::to_string(r.stay_id), std::to_string(r.hour), r.drug, format_number(r.dose_mg)});
}

Cohort read_cohort_csv(const std::string& csv_path, const std::string& sidecar_path) {
  const CsvTable table = read_csv(csv_path);
  if (static_cast<int>(table.header.size()) != 3 + kNumObs + kNumActions + 1)
    throw std::runtime_error("cohort: unexpected column count in " + csv_path);

  Cohort cohort;
  Trajectory* cur = nullptr;
  for (const auto& row : table.rows) {
    const std::int64_t stay_id = std::stoll(row[0]);
    if (!cur || cur->stay_id != stay_id) {
      cohort.stays.emplace_back();
      cur = &cohort.stays.back();
      cur->stay_id = stay_id;
      cur->patient_id = std::stoll(row[1]);
    }
    Step step;
    step.obs = Vec::Constant(kNumObs, std::nanf(""));
    step.action = Vec::Zero(kNumActions);
    for (int f = 0; f < kNumObs; ++f) {
      const std::string& cell = row[3 + f];
      if (!cell.empty()) step.obs(f) = std::stof(cell);
    }
    for (int a = 0; a < kNumActions; ++a) step.action(a) = std::stof(row[3 + kNumObs + a]);
    cur->mortality = std::stoi(row[3 + kNumObs + kNumActions]);
    cur->steps.push_back(std::move(step));
  }

  std::ifstream side(sidecar_path);
  if (!side) throw std::runtime_error("cohort: cannot open sidecar " + sidecar_path);
  nlohmann::json j = nlohmann::json::parse(side);
  cohort.seed = j.value("seed", 0ULL);
  cohort.config = j.value("config", nlohmann::json::object());
  // Bind each map before iterating: items() on a temporary dangles.
  const nlohmann::json comorb = j.value("comorbidity", nlohmann::json::object());
  for (const auto& [key, val] : comorb.items())
    cohort.comorbidity[std::stoll(key)] = val.get<int>();
  const nlohmann::json weights = j.value("weight_kg", nlohmann::json::object());
  for (const auto& [key, val] : weights.items())
    cohort.weight_kg[std::stoll(key)] = val.get<double>();
  const nlohmann::json split = j.value("split", nlohmann::json::object());
  for (const auto& [key, val] : split.items())
    cohort.split[std::stoll(key)] = static_cast<Split>(val.get<int>());
  return cohort;
}

std::vector<MedRecord> read_med_records_csv(const std::string& csv_path) {
  const CsvTable table = read_csv(csv_path);
  std::vector<MedRecord> records;
  for (const auto& row : table.rows) {
    MedRecord r;
    r.stay_id = std::stoll(row[0]);
    r.hour = std::stoi(row[1]);
    r.drug = row[2];
    r.dose_mg = std::stod(row[3]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace sedrl::sim
