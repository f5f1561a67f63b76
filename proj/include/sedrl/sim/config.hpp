#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

namespace sedrl::sim {

// Observation layout: 15 quantitative channels followed by 4 ordinal ones.
inline constexpr int kNumQuant = 15;
inline constexpr int kNumObs = 19;
inline constexpr int kNumActions = 4;

inline constexpr int kPainIdx = 15;
inline constexpr int kGcsIdx = 16;
inline constexpr int kSasIdx = 17;
inline constexpr int kDeliriumIdx = 18;

inline const std::array<const char*, kNumObs> kObsNames = {
    "heart_rate", "resp_rate",   "spo2",        "map_bp",     "sbp",
    "dbp",        "temp_c",      "urine_ml",    "glucose",    "potassium",
    "sodium",     "chloride",    "bicarbonate", "creatinine", "bun",
    "pain",       "gcs",         "sas",         "delirium"};

inline const std::array<const char*, kNumActions> kActionNames = {
    "opioid_ome_mg", "propofol_mg_kg", "benzo_midaz_mg", "dexmed_mg_kg"};

enum ActionIdx { kOpioid = 0, kPropofol = 1, kBenzo = 2, kDexmed = 3 };

// Affine emission of one quantitative channel from the hidden state, with
// Gaussian noise and clamping to a plausible physiological range.
struct EmissionChannel {
  std::string name;
  double base = 0, w_noci = 0, w_sed = 0, w_instab = 0, w_renal_loss = 0, w_metab = 0;
  double sigma = 0, lo = 0, hi = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EmissionChannel, name, base, w_noci, w_sed,
                                                w_instab, w_renal_loss, w_metab, sigma, lo, hi)

// Every coefficient of the ground-truth POMDP lives here so the strength of
// the engineered pain/mortality trade-off stays tunable from one document.
struct SimConfig {
  // Cohort scale and structure.
  int stays = 2000;
  double multi_stay_prob = 0.15;
  double min_hours = 12.0;
  double max_hours = 240.0;

  // Dose ceilings per action (raw units per hour).
  std::array<double, 4> a_max{40.0, 4.0, 8.0, 1.5};

  // Patient sampling.
  double comorb_gamma_shape = 2.0;
  double comorb_gamma_scale = 3.2;
  double frailty_per_score = 0.028;
  double frailty_noise = 0.04;
  double init_noci_lo = 2.0;
  double init_noci_hi = 9.0;
  double noci_base_per_score = 0.22;
  double noci_base_floor = 3.0;
  double noci_base_noise = 0.8;
  double weight_mean = 82.0;
  double weight_sd = 18.0;

  // Hidden-state dynamics.
  double noci_relax = 0.25;
  double op_d50 = 6.0;
  double prop_d50 = 1.2;
  double benzo_d50 = 2.5;
  double dex_d50 = 0.4;
  double op_noci_gain = 1.5;
  double prop_noci_gain = 2.0;
  double sed_gain_op = 1.0;
  double sed_gain_prop = 3.2;
  double sed_gain_benzo = 2.2;
  double sed_gain_dex = 1.4;
  double sed_decay = 0.25;
  double hemo_recover = 0.06;
  double hemo_oversed = 0.05;
  double hemo_pain = 0.02;
  double oversed_threshold = 7.0;
  double pain_stress_threshold = 8.0;
  double renal_revert = 0.05;
  double metab_revert = 0.05;
  double noise_noci = 0.35;
  double noise_sed = 0.20;
  double noise_hemo = 0.015;
  double noise_renal = 0.015;
  double noise_metab = 0.015;

  // Per-step hazard and the 30-day post-discharge draw.
  double hazard_floor = 2e-4;
  double haz_frail_op = 0.30;
  double haz_oversed = 0.004;
  double haz_instab = 0.05;
  double post_b0 = -4.0;
  double post_frail = 4.2;
  double post_instab = 2.6;
  double post_metab = 1.2;

  // Logged clinician policy.
  double pain_floor = 1.0;
  double maintenance_frac = 0.03;
  double base_intensity = 0.55;
  double mix_base = 0.30;
  double mix_gain = 0.55;
  double benzo_frac = 0.15;
  double dex_frac = 0.20;
  double dose_noise_sigma = 0.5;
  double zero_dose_prob = 0.20;
  // Per-stay multiplicative dosing-intensity bias (lognormal sigma): some
  // stays are systematically under- or over-treated, not just hour to hour.
  double stay_dose_bias_sigma = 0.35;

  // Missingness rates per feature class.
  double missing_vitals = 0.05;
  double missing_urine = 0.30;
  double missing_labs = 0.90;
  double missing_ordinal = 0.50;

  std::vector<EmissionChannel> channels = default_channels();

  static std::vector<EmissionChannel> default_channels();
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    SimConfig, stays, multi_stay_prob, min_hours, max_hours, a_max, comorb_gamma_shape,
    comorb_gamma_scale, frailty_per_score, frailty_noise, init_noci_lo, init_noci_hi,
    noci_base_per_score, noci_base_floor, noci_base_noise, weight_mean, weight_sd, noci_relax,
    op_d50, prop_d50, benzo_d50, dex_d50, op_noci_gain, prop_noci_gain, sed_gain_op,
    sed_gain_prop, sed_gain_benzo, sed_gain_dex, sed_decay, hemo_recover, hemo_oversed,
    hemo_pain, oversed_threshold, pain_stress_threshold, renal_revert, metab_revert,
    noise_noci, noise_sed, noise_hemo, noise_renal, noise_metab, hazard_floor, haz_frail_op,
    haz_oversed, haz_instab, post_b0, post_frail, post_instab, post_metab, pain_floor,
    maintenance_frac, base_intensity, mix_base, mix_gain, benzo_frac, dex_frac,
    dose_noise_sigma, zero_dose_prob, stay_dose_bias_sigma, missing_vitals, missing_urine, missing_labs,
    missing_ordinal, channels)

}  // namespace sedrl::sim
