#include "sedrl/pipeline/hold.hpp"

#include <stdexcept>

namespace sedrl::pipeline {

HoldRule default_hold_rules() {
  HoldRule rules{};
  for (int f = 0; f <= 7; ++f) rules[f] = 4;
  for (int f = 8; f <= 14; ++f) rules[f] = 24;
  for (int f = sim::kPainIdx; f <= sim::kDeliriumIdx; ++f) rules[f] = 8;
  return rules;
}

void sample_and_hold(sim::Trajectory& traj, const HoldRule& rules) {
  for (int f = 0; f < sim::kNumObs; ++f) {
    if (rules[f] < 0) throw std::invalid_argument("sample_and_hold: negative horizon");
    int last_seen = -1;
    float last_value = 0.0f;
    for (int t = 0; t < traj.length(); ++t) {
      const float v = traj.steps[t].obs(f);
      if (!sim::is_missing(v)) {
        last_seen = t;
        last_value = v;
      } else if (last_seen >= 0 && t - last_seen <= rules[f]) {
        traj.steps[t].obs(f) = last_value;
      }
    }
  }
}

void sample_and_hold(sim::Cohort& cohort, const HoldRule& rules) {
  for (auto& traj : cohort.stays) sample_and_hold(traj, rules);
}

}  // namespace sedrl::pipeline
