#include "sedrl/sim/simulator.hpp"

#include <cmath>
#include <stdexcept>

namespace sedrl::sim {

namespace {

double clampd(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
// Saturating dose-response.
double eff(double dose, double d50) { return dose / (dose + d50); }

}  // namespace

std::vector<EmissionChannel> SimConfig::default_channels() {
  //                 name          base  noci   sed  instab renal_l metab  sigma   lo    hi
  return {
      {"heart_rate", 62.0, 2.8, -1.5, 25.0, 0.0, 0.0, 2.5, 30.0, 220.0},
      {"resp_rate", 14.0, 0.8, -0.9, 0.0, 0.0, 4.0, 0.8, 4.0, 60.0},
      {"spo2", 98.5, 0.0, -0.3, -8.0, 0.0, 0.0, 0.5, 70.0, 100.0},
      {"map_bp", 88.0, 1.2, -1.1, -24.0, 0.0, 0.0, 2.2, 40.0, 140.0},
      {"sbp", 125.0, 1.8, -1.5, -32.0, 0.0, 0.0, 2.8, 60.0, 220.0},
      {"dbp", 72.0, 0.8, -0.8, -22.0, 0.0, 0.0, 1.5, 30.0, 130.0},
      {"temp_c", 36.6, 0.0, 0.0, 0.0, 0.0, 3.0, 0.15, 34.0, 41.0},
      {"urine_ml", 85.0, 0.0, 0.0, -25.0, -80.0, 0.0, 5.0, 0.0, 400.0},
      {"glucose", 112.0, 0.0, 0.0, 0.0, 0.0, 120.0, 8.0, 40.0, 600.0},
      {"potassium", 4.0, 0.0, 0.0, 0.0, 2.5, 0.0, 0.15, 2.0, 8.0},
      {"sodium", 140.0, 0.0, 0.0, 0.0, 0.0, -15.0, 1.0, 115.0, 165.0},
      {"chloride", 103.0, 0.0, 0.0, 0.0, 0.0, -16.0, 0.7, 85.0, 125.0},
      {"bicarbonate", 24.0, 0.0, 0.0, 0.0, 0.0, -12.0, 0.8, 8.0, 45.0},
      {"creatinine", 0.9, 0.0, 0.0, 0.0, 3.8, 0.0, 0.12, 0.2, 15.0},
      {"bun", 16.0, 0.0, 0.0, 0.0, 55.0, 0.0, 2.0, 3.0, 180.0},
  };
}

std::pair<PatientProfile, HiddenState> Simulator::sample_patient(Rng& rng) const {
  PatientProfile p;
  // Right-skewed comorbidity: discretized Gamma(shape 2) via two exponentials.
  const double g = -cfg_.comorb_gamma_scale *
                   (std::log(1.0 - rng.uniform()) + std::log(1.0 - rng.uniform()));
  p.comorbidity_score = static_cast<int>(clampd(std::floor(g), 0.0, 30.0));
  p.weight_kg = clampd(rng.normal(cfg_.weight_mean, cfg_.weight_sd), 40.0, 160.0);
  p.clinician_style = rng.uniform();
  p.noci_baseline = clampd(cfg_.noci_base_floor + cfg_.noci_base_per_score * p.comorbidity_score +
                               rng.uniform(-cfg_.noci_base_noise, cfg_.noci_base_noise),
                           0.0, 8.0);

  HiddenState z;
  z.frailty = clampd(cfg_.frailty_per_score * p.comorbidity_score +
                         rng.uniform(-cfg_.frailty_noise, cfg_.frailty_noise),
                     0.0, 1.0);
  z.noci = rng.uniform(cfg_.init_noci_lo, cfg_.init_noci_hi);
  z.sed = 0.0;
  z.hemo = clampd(0.95 - 0.30 * z.frailty + rng.uniform(-0.03, 0.03), 0.0, 1.0);
  z.renal = clampd(1.0 - 0.5 * z.frailty - rng.uniform(0.0, 0.1), 0.0, 1.0);
  z.metab = clampd(0.10 + 0.45 * z.frailty + rng.uniform(0.0, 0.1), 0.0, 1.0);
  return {p, z};
}

HiddenState Simulator::step_dynamics(const HiddenState& z, const Vec& action, Rng* rng) const {
  return step_dynamics(z, action, rng, 2.0);
}

HiddenState Simulator::step_dynamics(const HiddenState& z, const Vec& action, Rng* rng,
                                     double noci_baseline) const {
  if (action.size() != kNumActions) throw std::invalid_argument("step_dynamics: action size");
  for (int k = 0; k < kNumActions; ++k)
    if (action(k) < 0.0f || std::isnan(action(k)))
      throw std::domain_error("step_dynamics: negative dose");
  const double op = action(kOpioid), prop = action(kPropofol);
  const double benzo = action(kBenzo), dex = action(kDexmed);
  auto noise = [&](double s) { return rng ? rng->normal(0.0, s) : 0.0; };

  HiddenState n = z;
  n.noci = clampd(z.noci + cfg_.noci_relax * (noci_baseline - z.noci) -
                      cfg_.op_noci_gain * eff(op, cfg_.op_d50) -
                      cfg_.prop_noci_gain * eff(prop, cfg_.prop_d50) + noise(cfg_.noise_noci),
                  0.0, 10.0);
  n.sed = clampd(z.sed - cfg_.sed_decay * z.sed + cfg_.sed_gain_op * eff(op, cfg_.op_d50) +
                     cfg_.sed_gain_prop * eff(prop, cfg_.prop_d50) +
                     cfg_.sed_gain_benzo * eff(benzo, cfg_.benzo_d50) +
                     cfg_.sed_gain_dex * eff(dex, cfg_.dex_d50) + noise(cfg_.noise_sed),
                 0.0, 10.0);
  n.hemo = clampd(z.hemo + cfg_.hemo_recover * (1.0 - z.hemo) -
                      cfg_.hemo_oversed * std::max(0.0, z.sed - cfg_.oversed_threshold) -
                      cfg_.hemo_pain * std::max(0.0, z.noci - cfg_.pain_stress_threshold) +
                      noise(cfg_.noise_hemo),
                  0.0, 1.0);
  n.renal = clampd(z.renal + cfg_.renal_revert * ((1.0 - 0.5 * z.frailty) - z.renal) +
                       noise(cfg_.noise_renal),
                   0.0, 1.0);
  n.metab = clampd(z.metab + cfg_.metab_revert * ((0.10 + 0.5 * z.frailty) - z.metab) +
                       noise(cfg_.noise_metab),
                   0.0, 1.0);
  return n;
}

double Simulator::hazard(const HiddenState& z, const Vec& action) const {
  const double op_norm = action(kOpioid) / cfg_.a_max[kOpioid];
  const double instab = 1.0 - z.hemo;
  // Additive per-hour probability. Opioid harm is quadratic in dose and
  // linear in frailty: negligible for robust patients on routine doses,
  // steep for frail ones on aggressive ones.
  const double h = cfg_.hazard_floor + cfg_.haz_frail_op * z.frailty * op_norm * op_norm +
                   cfg_.haz_oversed * std::max(0.0, z.sed - cfg_.oversed_threshold) +
                   cfg_.haz_instab * instab * instab;
  return clampd(h, cfg_.hazard_floor, 0.95);
}

double Simulator::post_discharge_mortality_prob(const HiddenState& z) const {
  return sigmoid(cfg_.post_b0 + cfg_.post_frail * z.frailty + cfg_.post_instab * (1.0 - z.hemo) +
                 cfg_.post_metab * z.metab);
}

Vec Simulator::emit_observation(const HiddenState& z, Rng* rng) const {
  Vec obs(kNumObs);
  const double instab = 1.0 - z.hemo;
  const double renal_loss = 1.0 - z.renal;
  for (int f = 0; f < kNumQuant; ++f) {
    const auto& c = cfg_.channels[f];
    double v = c.base + c.w_noci * z.noci + c.w_sed * z.sed + c.w_instab * instab +
               c.w_renal_loss * renal_loss + c.w_metab * z.metab;
    if (rng) v += rng->normal(0.0, c.sigma);
    obs(f) = static_cast<float>(clampd(v, c.lo, c.hi));
  }
  obs(kPainIdx) = static_cast<float>(std::round(clampd(z.noci, 0.0, 10.0)));
  obs(kGcsIdx) = static_cast<float>(std::round(clampd(15.0 - 1.2 * z.sed, 3.0, 15.0)));
  obs(kSasIdx) = static_cast<float>(std::round(clampd(4.0 + 0.35 * z.noci - 0.55 * z.sed, 1.0, 7.0)));
  const double p_delirium = sigmoid(-2.5 + 2.2 * z.metab + 0.25 * z.sed);
  obs(kDeliriumIdx) = rng ? static_cast<float>(rng->uniform() < p_delirium)
                          : static_cast<float>(p_delirium > 0.5);
  return obs;
}

Vec Simulator::behavior_action(const HiddenState& z, const PatientProfile& profile,
                               Rng* rng) const {
  const double pain = clampd(z.noci, 0.0, 10.0);
  const double level = std::max(0.0, pain - cfg_.pain_floor) / (10.0 - cfg_.pain_floor);
  Vec a = Vec::Zero(kNumActions);

  if (level <= 0.0) {
    // Maintenance-only hour: light continuous sedation, no analgesia bolus.
    a(kPropofol) = static_cast<float>(cfg_.maintenance_frac * cfg_.a_max[kPropofol]);
    a(kDexmed) = static_cast<float>(cfg_.maintenance_frac * cfg_.a_max[kDexmed]);
  } else {
    const double intensity = cfg_.base_intensity * level;
    const double opioid_share = cfg_.mix_base + cfg_.mix_gain * profile.clinician_style;
    a(kOpioid) = static_cast<float>(cfg_.a_max[kOpioid] * intensity * opioid_share);
    a(kPropofol) = static_cast<float>(cfg_.a_max[kPropofol] * intensity * (1.0 - opioid_share));
    a(kBenzo) = static_cast<float>(cfg_.a_max[kBenzo] * cfg_.benzo_frac * level);
    a(kDexmed) = static_cast<float>(cfg_.a_max[kDexmed] * cfg_.dex_frac * level);
  }

  if (rng) {
    for (int k = 0; k < kNumActions; ++k) {
      if (a(k) <= 0.0f) continue;
      a(k) = static_cast<float>(a(k) * rng->lognormal(0.0, cfg_.dose_noise_sigma));
      if (rng->uniform() < cfg_.zero_dose_prob) a(k) = 0.0f;
    }
  }
  for (int k = 0; k < kNumActions; ++k) {
    double cap = cfg_.a_max[k];
    if (level <= 0.0) cap = std::min(cap, cfg_.maintenance_frac * cfg_.a_max[k]);
    a(k) = static_cast<float>(clampd(a(k), 0.0, cap));
  }
  return a;
}

Simulator::StayResult Simulator::simulate_stay(std::int64_t stay_id,
                                               const PatientProfile& profile, HiddenState z,
                                               std::uint64_t stay_seed, Policy* policy,
                                               long* clamped) const {
  Rng len_rng(derive_seed(stay_seed, "length"));
  Rng emit_rng(derive_seed(stay_seed, "emit"));
  Rng dyn_rng(derive_seed(stay_seed, "dyn"));
  Rng beh_rng(derive_seed(stay_seed, "behavior"));
  Rng haz_rng(derive_seed(stay_seed, "hazard"));

  const int target_len = static_cast<int>(std::lround(
      std::exp(len_rng.uniform(std::log(cfg_.min_hours), std::log(cfg_.max_hours)))));

  StayResult res;
  res.traj.stay_id = stay_id;
  res.traj.patient_id = profile.patient_id;
  if (policy) policy->begin_stay();

  Vec last_action = Vec::Zero(kNumActions);
  // Stay-level treatment culture: the whole stay runs systematically hot or
  // cold relative to the pain-driven baseline dose.
  const double stay_bias = beh_rng.lognormal(0.0, cfg_.stay_dose_bias_sigma);
  bool died_in_stay = false;
  for (int t = 0; t < target_len; ++t) {
    const Vec obs = emit_observation(z, &emit_rng);
    Vec action;
    if (policy) {
      action = policy->act(obs, last_action);
      for (int k = 0; k < kNumActions; ++k) {
        const float v = action(k);
        if (std::isnan(v) || v < 0.0f || v > static_cast<float>(cfg_.a_max[k])) {
          action(k) = static_cast<float>(clampd(std::isnan(v) ? 0.0 : v, 0.0, cfg_.a_max[k]));
          if (clamped) ++*clamped;
        }
      }
    } else {
      action = behavior_action(z, profile, &beh_rng);
      for (int k = 0; k < kNumActions; ++k)
        action(k) = static_cast<float>(clampd(action(k) * stay_bias, 0.0, cfg_.a_max[k]));
    }
    res.traj.steps.push_back({obs, action});
    res.cum_pain += obs(kPainIdx);
    last_action = action;

    // Death cannot terminate the stay before two recorded hours.
    if (t >= 1 && haz_rng.uniform() < hazard(z, action)) {
      died_in_stay = true;
      z = step_dynamics(z, action, &dyn_rng, profile.noci_baseline);
      break;
    }
    z = step_dynamics(z, action, &dyn_rng, profile.noci_baseline);
  }

  res.traj.mortality = died_in_stay ? 1
                       : (haz_rng.uniform() < post_discharge_mortality_prob(z) ? 1 : 0);
  res.final_state = z;
  return res;
}

Cohort Simulator::generate_cohort(int n_stays, std::uint64_t seed) const {
  if (n_stays < 1) throw std::invalid_argument("generate_cohort: n_stays < 1");
  Cohort cohort;
  cohort.seed = seed;
  cohort.config = cfg_;

  Rng structure_rng(derive_seed(seed, "cohort-structure"));
  PatientProfile profile;
  std::int64_t next_patient = 0;

  for (int i = 0; i < n_stays; ++i) {
    const std::uint64_t stay_seed = derive_seed(seed, "stay:" + std::to_string(i));
    const bool reuse = (i > 0) && structure_rng.uniform() < cfg_.multi_stay_prob;
    HiddenState z0;
    Rng patient_rng(derive_seed(stay_seed, "patient"));
    if (reuse) {
      // Same patient (static frailty/comorbidity), fresh admission state.
      auto [fresh, z] = sample_patient(patient_rng);
      (void)fresh;
      z.frailty = clampd(cfg_.frailty_per_score * profile.comorbidity_score, 0.0, 1.0);
      z0 = z;
    } else {
      auto [p, z] = sample_patient(patient_rng);
      profile = p;
      profile.patient_id = next_patient++;
      z0 = z;
    }
    auto res = simulate_stay(i, profile, z0, stay_seed, nullptr, nullptr);
    cohort.comorbidity[profile.patient_id] = profile.comorbidity_score;
    cohort.weight_kg[profile.patient_id] = profile.weight_kg;

    // Decompose combined doses into raw drug records for the conversion
    // stage of the preprocessing pipeline.
    Rng med_rng(derive_seed(stay_seed, "meds"));
    for (int t = 0; t < res.traj.length(); ++t) {
      const float ome = res.traj.steps[t].action(kOpioid);
      if (ome > 0.0f) {
        const double f_fent = med_rng.uniform(0.0, 0.6);
        const double f_hydro = med_rng.uniform(0.0, 1.0 - f_fent) * 0.5;
        const double f_morph = 1.0 - f_fent - f_hydro;
        if (f_fent > 0)
          cohort.med_records.push_back({i, t, "fentanyl", ome * f_fent / 300.0});
        if (f_hydro > 0)
          cohort.med_records.push_back({i, t, "hydromorphone", ome * f_hydro / 20.0});
        cohort.med_records.push_back({i, t, "morphine", ome * f_morph / 3.0});
      }
      const float midaz_eq = res.traj.steps[t].action(kBenzo);
      if (midaz_eq > 0.0f) {
        const double f_mid = med_rng.uniform(0.3, 1.0);
        const double f_lor = med_rng.uniform(0.0, 1.0 - f_mid);
        const double f_dia = 1.0 - f_mid - f_lor;
        cohort.med_records.push_back({i, t, "midazolam", midaz_eq * f_mid});
        if (f_lor > 0)
          cohort.med_records.push_back({i, t, "lorazepam", midaz_eq * f_lor / 2.0});
        if (f_dia > 0)
          cohort.med_records.push_back({i, t, "diazepam", midaz_eq * f_dia / 0.4});
      }
    }

    cohort.stays.push_back(std::move(res.traj));
  }
  return cohort;
}

std::vector<double> Simulator::default_missing_rates() const {
  std::vector<double> rates(kNumObs, 0.0);
  for (int f = 0; f <= 6; ++f) rates[f] = cfg_.missing_vitals;
  rates[7] = cfg_.missing_urine;
  for (int f = 8; f <= 14; ++f) rates[f] = cfg_.missing_labs;
  for (int f = kPainIdx; f <= kDeliriumIdx; ++f) rates[f] = cfg_.missing_ordinal;
  return rates;
}

Cohort Simulator::inject_missingness(const Cohort& cohort, const std::vector<double>& rates,
                                     std::uint64_t seed) const {
  if (static_cast<int>(rates.size()) != kNumObs)
    throw std::invalid_argument("inject_missingness: need one rate per feature");
  for (double r : rates)
    if (r < 0.0 || r >= 1.0) throw std::invalid_argument("inject_missingness: rate out of [0,1)");

  Cohort masked = cohort;
  Rng rng(derive_seed(seed, "missingness"));
  for (auto& traj : masked.stays)
    for (auto& step : traj.steps)
      for (int f = 0; f < kNumObs; ++f)
        if (rng.uniform() < rates[f]) step.obs(f) = std::nanf("");
  return masked;
}

void Simulator::RolloutSummary::finalize() {
  if (stays.empty()) return;
  double deaths = 0, pain = 0;
  for (const auto& s : stays) {
    deaths += s.mortality;
    pain += s.cumulative_pain;
  }
  mortality_rate = deaths / static_cast<double>(stays.size());
  mean_cumulative_pain = pain / static_cast<double>(stays.size());
}

Simulator::RolloutSummary Simulator::rollout_policy(Policy& policy, int n_stays,
                                                    std::uint64_t seed) const {
  return rollout_impl(&policy, n_stays, seed);
}

Simulator::RolloutSummary Simulator::rollout_behavior(int n_stays, std::uint64_t seed) const {
  return rollout_impl(nullptr, n_stays, seed);
}

Simulator::RolloutSummary Simulator::rollout_impl(Policy* policy, int n_stays,
                                                  std::uint64_t seed) const {
  RolloutSummary summary;
  Rng structure_rng(derive_seed(seed, "cohort-structure"));
  PatientProfile profile;
  std::int64_t next_patient = 0;

  for (int i = 0; i < n_stays; ++i) {
    const std::uint64_t stay_seed = derive_seed(seed, "stay:" + std::to_string(i));
    const bool reuse = (i > 0) && structure_rng.uniform() < cfg_.multi_stay_prob;
    HiddenState z0;
    Rng patient_rng(derive_seed(stay_seed, "patient"));
    if (reuse) {
      auto [fresh, z] = sample_patient(patient_rng);
      (void)fresh;
      z.frailty = clampd(cfg_.frailty_per_score * profile.comorbidity_score, 0.0, 1.0);
      z0 = z;
    } else {
      auto [p, z] = sample_patient(patient_rng);
      profile = p;
      profile.patient_id = next_patient++;
      z0 = z;
    }
    auto res = simulate_stay(i, profile, z0, stay_seed, policy, &summary.clamped_actions);
    summary.stays.push_back({i, res.traj.mortality, res.cum_pain, res.traj.length()});
  }
  summary.finalize();
  return summary;
}

}  // namespace sedrl::sim
