#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedrl/analysis/agreement.hpp"
#include "sedrl/analysis/stats.hpp"
#include "sedrl/nn/gru.hpp"
#include "sedrl/nn/mlp.hpp"
#include "sedrl/pipeline/scale.hpp"
#include "sedrl/sim/cohort.hpp"

namespace sedrl::analysis {

struct PolicyHandle {
  std::string name;  // "A", "B", ...
  const nn::Mlp* actor = nullptr;
};

struct NamedCorrelation {
  std::string policy;
  std::string target;  // "mortality", "cumulative_pain", "comorbidity"
  bool defined = true;
  CorrelationEstimate estimate;
};

struct Report {
  ActionMax a_max{};
  std::map<std::string, std::vector<AgreementRecord>> records;  // per policy
  std::vector<NamedCorrelation> correlations;
};

// Maximum recorded dose per action over the test split, in raw dose units.
ActionMax test_action_maxima(const sim::Cohort& cohort, const pipeline::Scaler& scaler);

// Counterfactual proposals along one stay's logged history, in raw units:
// the actor sees the recurrent encoding of everything observed so far.
std::vector<nn::Vec> propose_doses(const nn::GruStack& encoder, const nn::Mlp& actor,
                                   const pipeline::Scaler& scaler, const sim::Trajectory& traj);

// Evaluates every policy on the test split and writes the report bundle:
// agreement.csv, correlations.csv, bins_policyB.csv, comorbidity.csv,
// propofol_strata.csv, stay_trace.csv, matching .svg renderings and
// manifest.json. Undefined correlations are reported as such, not errors.
Report generate_report(const sim::Cohort& cohort, const pipeline::Scaler& scaler,
                       const nn::GruStack& encoder, const std::vector<PolicyHandle>& policies,
                       const std::string& out_dir, std::uint64_t seed,
                       const nlohmann::json& manifest_extra = nlohmann::json::object());

}  // namespace sedrl::analysis
