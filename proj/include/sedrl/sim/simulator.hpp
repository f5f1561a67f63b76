#pragma once

#include <functional>
#include <memory>

#include "sedrl/common/rng.hpp"
#include "sedrl/sim/cohort.hpp"
#include "sedrl/sim/config.hpp"

namespace sedrl::sim {

// Hidden physiological state; nociception and sedation depth live on a 0-10
// scale, the stability/function channels on 0-1, frailty is static per
// patient.
struct HiddenState {
  double noci = 0;       // nociception, [0, 10]
  double sed = 0;        // sedation depth, [0, 10]
  double hemo = 1;       // hemodynamic stability, [0, 1], 1 = stable
  double renal = 1;      // renal function, [0, 1], 1 = normal
  double metab = 0;      // metabolic derangement, [0, 1], 0 = none
  double frailty = 0;    // [0, 1], constant over a stay
};

struct PatientProfile {
  std::int64_t patient_id = 0;
  double weight_kg = 80;         // [40, 160]
  int comorbidity_score = 0;     // [0, 30], Elixhauser analog
  double clinician_style = 0.5;  // [0, 1], 1 = opioid-heavy dosing culture
  double noci_baseline = 2.0;    // homeostatic pain level without treatment
};

class Simulator {
 public:
  explicit Simulator(SimConfig config) : cfg_(std::move(config)) {}
  const SimConfig& config() const { return cfg_; }

  // Comorbidity from a right-skewed discrete distribution; frailty affine in
  // the score plus bounded noise; initial nociception uniform in [lo, hi].
  std::pair<PatientProfile, HiddenState> sample_patient(Rng& rng) const;

  // One hour of hidden dynamics under the given doses. Throws on negative
  // doses. Noise uses rng; pass nullptr for the deterministic skeleton.
  // noci_baseline is the homeostatic pain level the state relaxes toward
  // without treatment (per-patient; see PatientProfile).
  HiddenState step_dynamics(const HiddenState& z, const Vec& action, Rng* rng) const;
  HiddenState step_dynamics(const HiddenState& z, const Vec& action, Rng* rng,
                            double noci_baseline) const;

  // Per-hour death probability: additive in frailty x opioid exposure,
  // over-sedation and hemodynamic instability. This interaction is what
  // makes opioid-heavy pain suppression lower pain yet raise mortality.
  double hazard(const HiddenState& z, const Vec& action) const;

  // 19-dimensional observation: affine quantitative channels with Gaussian
  // noise, then quantized ordinal scales. Pass nullptr rng for noise-free.
  Vec emit_observation(const HiddenState& z, Rng* rng) const;

  // Logged clinician policy: doses rise with observed pain, the opioid vs
  // propofol mix follows clinician_style, log-normal dose noise and
  // occasional zero-dose hours. Pass nullptr rng to disable the noise.
  Vec behavior_action(const HiddenState& z, const PatientProfile& profile, Rng* rng) const;

  double post_discharge_mortality_prob(const HiddenState& final_state) const;

  Cohort generate_cohort(int n_stays, std::uint64_t seed) const;

  // Masks observation cells at per-feature rates; actions are never masked.
  // Returns the masked cohort; the caller keeps the input as ground truth.
  Cohort inject_missingness(const Cohort& cohort, const std::vector<double>& rates,
                            std::uint64_t seed) const;

  std::vector<double> default_missing_rates() const;

  struct StayOutcome {
    std::int64_t stay_id = 0;
    int mortality = 0;
    double cumulative_pain = 0;
    int length = 0;
  };

  struct RolloutSummary {
    std::vector<StayOutcome> stays;
    double mortality_rate = 0;
    double mean_cumulative_pain = 0;
    long clamped_actions = 0;  // negative/NaN policy doses clamped into range

    void finalize();
  };

  // Stateful dosing policy driven by the emitted observation stream.
  class Policy {
   public:
    virtual ~Policy() = default;
    virtual void begin_stay() = 0;
    // obs is the new observation; last_action the previous hour's doses
    // (zero at the first hour). Returns raw-unit doses.
    virtual Vec act(const Vec& obs, const Vec& last_action) = 0;
  };

  // Drives the simulator with the policy's doses under common random
  // numbers: the same seed reproduces the same patients and noise streams
  // across policies, so outcome differences are paired.
  RolloutSummary rollout_policy(Policy& policy, int n_stays, std::uint64_t seed) const;

  // The logged behavior policy rolled out through the same path (used for
  // self-consistency and paired baselines).
  RolloutSummary rollout_behavior(int n_stays, std::uint64_t seed) const;

 private:
  struct StayResult {
    Trajectory traj;
    HiddenState final_state;
    double cum_pain = 0;
  };

  // policy == nullptr means behavior policy.
  StayResult simulate_stay(std::int64_t stay_id, const PatientProfile& profile,
                           HiddenState z, std::uint64_t stay_seed, Policy* policy,
                           long* clamped) const;

  RolloutSummary rollout_impl(Policy* policy, int n_stays, std::uint64_t seed) const;

  SimConfig cfg_;
};

}  // namespace sedrl::sim
