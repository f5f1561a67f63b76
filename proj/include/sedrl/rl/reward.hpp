#pragma once

#include <vector>

#include <json.hpp>

namespace sedrl::rl {

// Per-step reward: a pain penalty normalized so its stay total is at most
// w_pain in magnitude, plus a terminal mortality penalty. Policy A ignores
// mortality (w_mort = 0); policy B uses w_mort = 10 * w_pain.
struct RewardConfig {
  double w_pain = 1.0;
  double w_mort = 0.0;
  double pain_max = 10.0;
  double gamma = 0.99;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RewardConfig, w_pain, w_mort, pain_max, gamma)

RewardConfig policy_a_reward();
RewardConfig policy_b_reward();

// pain[t] is the recorded 0..pain_max score; mortality applies at the final
// step only. r_t = -w_pain * pain_t / (T * pain_max) - w_mort * 1{t=T-1} * m.
std::vector<double> compute_rewards(const std::vector<double>& pain, int mortality,
                                    const RewardConfig& config);

}  // namespace sedrl::rl
