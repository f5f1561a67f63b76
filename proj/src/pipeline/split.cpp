#include "sedrl/pipeline/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "sedrl/common/rng.hpp"

namespace sedrl::pipeline {

using sim::Split;

void split_cohort(sim::Cohort& cohort, std::array<double, 3> fractions, std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split_cohort: fractions must sum to 1");

  std::map<std::int64_t, std::vector<std::int64_t>> stays_of;  // patient -> stay ids
  for (const auto& traj : cohort.stays) stays_of[traj.patient_id].push_back(traj.stay_id);
  if (stays_of.size() < 3) throw std::invalid_argument("split_cohort: need at least 3 patients");

  std::vector<std::int64_t> patients;
  patients.reserve(stays_of.size());
  for (const auto& [pid, stays] : stays_of) patients.push_back(pid);
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = 0; i + 1 < patients.size(); ++i) {
    const auto j = i + rng.uniform_int(patients.size() - i);
    std::swap(patients[i], patients[j]);
  }

  const auto n = static_cast<double>(cohort.stays.size());
  std::array<long, 3> target{static_cast<long>(std::lround(fractions[0] * n)),
                             static_cast<long>(std::lround(fractions[1] * n)), 0};
  target[2] = static_cast<long>(cohort.stays.size()) - target[0] - target[1];

  std::array<long, 3> count{0, 0, 0};
  for (std::int64_t pid : patients) {
    int bucket = 2;
    for (int b = 0; b < 3; ++b)
      if (count[b] < target[b]) {
        bucket = b;
        break;
      }
    for (std::int64_t stay : stays_of[pid]) {
      cohort.split[stay] = static_cast<Split>(bucket);
      ++count[bucket];
    }
  }
}

}  // namespace sedrl::pipeline
