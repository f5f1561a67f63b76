#pragma once

#include <array>
#include <cstdint>

#include "sedrl/sim/cohort.hpp"

namespace sedrl::pipeline {

// Patient-disjoint train/validation/test assignment: patients are shuffled,
// then each patient's stays go wholesale into the first bucket still short
// of its stay-count target. Writes cohort.split (stay_id -> label).
void split_cohort(sim::Cohort& cohort, std::array<double, 3> fractions, std::uint64_t seed);

inline constexpr std::array<double, 3> kDefaultSplit{0.64, 0.16, 0.20};

}  // namespace sedrl::pipeline
