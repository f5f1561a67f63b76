#include "sedrl/pipeline/scale.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace sedrl::pipeline {

using sim::Split;

sim::Vec Scaler::transform_obs(const sim::Vec& obs) const {
  sim::Vec out(sim::kNumObs);
  for (int f = 0; f < sim::kNumObs; ++f)
    out(f) = static_cast<float>((obs(f) - center[f]) / scale[f]);
  return out;
}

sim::Vec Scaler::inverse_obs(const sim::Vec& scaled) const {
  sim::Vec out(sim::kNumObs);
  for (int f = 0; f < sim::kNumObs; ++f)
    out(f) = static_cast<float>(scaled(f) * scale[f] + center[f]);
  return out;
}

sim::Vec Scaler::transform_action(const sim::Vec& action) const {
  sim::Vec out(sim::kNumActions);
  for (int k = 0; k < sim::kNumActions; ++k)
    out(k) = static_cast<float>(action(k) / a_max[k]);
  return out;
}

sim::Vec Scaler::inverse_action(const sim::Vec& scaled) const {
  sim::Vec out(sim::kNumActions);
  for (int k = 0; k < sim::kNumActions; ++k)
    out(k) = static_cast<float>(scaled(k) * a_max[k]);
  return out;
}

Scaler standardize_features(sim::Cohort& cohort) {
  // Training-split statistics.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(sim::kNumObs);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(sim::kNumObs);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(sim::kNumObs, 1e300);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(sim::kNumObs, -1e300);
  Eigen::VectorXd act_max = Eigen::VectorXd::Zero(sim::kNumActions);
  long rows = 0;
  for (const auto& traj : cohort.stays) {
    const auto it = cohort.split.find(traj.stay_id);
    if (it == cohort.split.end() || it->second != Split::kTrain) continue;
    for (const auto& step : traj.steps) {
      if (step.obs.array().isNaN().any())
        throw std::runtime_error("standardize_features: cohort not fully imputed");
      const Eigen::VectorXd o = step.obs.cast<double>();
      sum += o;
      sum_sq += o.cwiseProduct(o);
      lo = lo.cwiseMin(o);
      hi = hi.cwiseMax(o);
      act_max = act_max.cwiseMax(step.action.cast<double>());
      ++rows;
    }
  }
  if (rows < 2) throw std::runtime_error("standardize_features: no training split");

  Scaler s;
  for (int f = 0; f < sim::kNumObs; ++f) {
    if (f < sim::kNumQuant) {
      const double mean = sum(f) / rows;
      const double var = std::max(0.0, sum_sq(f) / rows - mean * mean);
      s.center[f] = mean;
      s.scale[f] = std::sqrt(var);
    } else {
      s.center[f] = lo(f);
      s.scale[f] = hi(f) - lo(f);
    }
    if (s.scale[f] < 1e-12) {
      std::cerr << "warning: zero-variance feature " << sim::kObsNames[f]
                << ", leaving centered with scale 1\n";
      s.scale[f] = 1.0;
    }
  }
  for (int k = 0; k < sim::kNumActions; ++k)
    s.a_max[k] = act_max(k) > 0.0 ? act_max(k) : 1.0;

  for (auto& traj : cohort.stays)
    for (auto& step : traj.steps) {
      step.obs = s.transform_obs(step.obs);
      step.action = s.transform_action(step.action);
    }
  return s;
}

void save_scaler(const Scaler& scaler, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << nlohmann::json(scaler).dump(2) << "\n";
}

Scaler load_scaler(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return nlohmann::json::parse(in).get<Scaler>();
}

}  // namespace sedrl::pipeline
