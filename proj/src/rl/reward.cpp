#include "sedrl/rl/reward.hpp"

#include <stdexcept>

namespace sedrl::rl {

RewardConfig policy_a_reward() { return {1.0, 0.0, 10.0, 0.99}; }
RewardConfig policy_b_reward() { return {1.0, 10.0, 10.0, 0.99}; }

std::vector<double> compute_rewards(const std::vector<double>& pain, int mortality,
                                    const RewardConfig& config) {
  if (config.w_pain <= 0.0) throw std::invalid_argument("reward: w_pain must be positive");
  if (config.w_mort < 0.0) throw std::invalid_argument("reward: w_mort must be non-negative");
  if (config.gamma < 0.0 || config.gamma >= 1.0)
    throw std::invalid_argument("reward: gamma must be in [0,1)");
  if (pain.empty()) throw std::invalid_argument("reward: empty trajectory");
  if (mortality != 0 && mortality != 1) throw std::domain_error("reward: mortality not 0/1");

  const auto T = static_cast<double>(pain.size());
  std::vector<double> rewards(pain.size());
  for (std::size_t t = 0; t < pain.size(); ++t) {
    if (pain[t] < 0.0 || pain[t] > config.pain_max)
      throw std::domain_error("reward: pain score out of range at step " + std::to_string(t));
    rewards[t] = -config.w_pain * pain[t] / (T * config.pain_max);
  }
  rewards.back() -= config.w_mort * mortality;
  return rewards;
}

}  // namespace sedrl::rl
