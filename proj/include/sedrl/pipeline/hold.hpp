#pragma once

#include <array>

#include "sedrl/sim/cohort.hpp"

namespace sedrl::pipeline {

// Maximum carry-forward age in hours, per observation feature.
using HoldRule = std::array<int, sim::kNumObs>;

// Vitals 4 h, labs 24 h, ordinal scales 8 h. Configuration defaults, not
// literature values.
HoldRule default_hold_rules();

// Last observation carried forward, limited by the feature horizon. Never
// overwrites observed cells; leading missing values stay missing.
void sample_and_hold(sim::Trajectory& traj, const HoldRule& rules);
void sample_and_hold(sim::Cohort& cohort, const HoldRule& rules = default_hold_rules());

}  // namespace sedrl::pipeline
