#pragma once

#include <array>
#include <string>

#include <json.hpp>

#include "sedrl/sim/cohort.hpp"

namespace sedrl::pipeline {

// Feature scaling fitted on the training split: quantitative channels are
// z-scored, ordinal scales min-max scaled to [0,1], doses divided by their
// per-action training maxima.
struct Scaler {
  std::array<double, sim::kNumObs> center{};
  std::array<double, sim::kNumObs> scale{};  // divisor, never zero
  std::array<double, sim::kNumActions> a_max{};

  sim::Vec transform_obs(const sim::Vec& obs) const;
  sim::Vec inverse_obs(const sim::Vec& scaled) const;
  sim::Vec transform_action(const sim::Vec& action) const;
  sim::Vec inverse_action(const sim::Vec& scaled) const;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Scaler, center, scale, a_max)

// Fits on the training split and transforms every stay in place. Requires a
// fully imputed cohort. Zero-variance features are left centered with scale
// 1 (warning on stderr).
Scaler standardize_features(sim::Cohort& cohort);

void save_scaler(const Scaler& scaler, const std::string& path);
Scaler load_scaler(const std::string& path);

}  // namespace sedrl::pipeline
