#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedrl/nn/mlp.hpp"
#include "sedrl/pipeline/scale.hpp"
#include "sedrl/rl/encoder.hpp"
#include "sedrl/rl/reward.hpp"
#include "sedrl/sim/simulator.hpp"

namespace sedrl::rl {

struct AgentConfig {
  int state_dim = 64;
  int action_dim = 4;
  int hidden = 64;
  double lr = 1e-4;
  double alpha = 2.0;   // behavior-regularization scale for the value term
  double kappa = 0.005; // target-network Polyak rate
  double gamma = 0.99;
  // Critic targets sum this many real rewards before bootstrapping. Hourly
  // pain rewards are tiny and a dose's effect is spread over the following
  // hours, so one-step targets bury the action's value in the bootstrap;
  // multi-step targets expose it directly.
  int n_step = 8;
  double clip_norm = 0.5;
  int batch_size = 256;
  int steps = 50000;
  int eval_every = 500;
  int log_every = 100;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AgentConfig, state_dim, action_dim, hidden, lr,
                                                alpha, kappa, gamma, n_step, clip_norm,
                                                batch_size, steps, eval_every, log_every)

// Twin pessimistic critics with target copies, plus a behavior-regularized
// deterministic actor whose sigmoid output lives in the scaled dose box
// [0,1]^d. Targets start as exact copies of the online networks.
struct Agent {
  nn::Mlp critic1, critic2, target1, target2;
  nn::Mlp actor, target_actor;
  nn::AdamState opt_c1, opt_c2, opt_actor;
  AgentConfig config;

  static Agent make(const AgentConfig& config, Rng& rng);
};

struct TransitionBatch {
  nn::Mat states;       // B x d_s
  nn::Mat actions;      // B x d_a (scaled)
  Eigen::VectorXf rewards;     // n-step discounted reward sum
  nn::Mat next_states;  // s_{t+n}; zero rows where the window hits the stay end
  Eigen::VectorXf terminal;    // 1 where there is no bootstrap state
  Eigen::VectorXf discounts;   // bootstrap factor gamma^n, 0 at terminal rows
};

// y = rewards + discounts * min_j Q'_j(s', pi'(s')). When discounts is left
// empty the one-step form gamma * (1 - terminal) is used.
Eigen::VectorXf bellman_targets(const TransitionBatch& batch, const Agent& agent);

struct CriticLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
};
CriticLosses critic_update(const TransitionBatch& batch, Agent& agent);

struct ActorStats {
  double loss = 0.0;
  double lambda = 0.0;
  double mean_abs_q = 0.0;
};
// Maximizes lambda * Q1(s, pi(s)) minus the squared cloning error, with
// lambda = alpha / mean|Q1(s,a)| recomputed per batch (fallback alpha when
// the batch mean is zero); then Polyak-updates all three targets.
ActorStats actor_update(const TransitionBatch& batch, Agent& agent);

struct LogRow {
  long step = 0;
  double critic1_loss = 0.0, critic2_loss = 0.0, actor_loss = 0.0;
  double lambda = 0.0, mean_abs_q = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // NaN = not evaluated
};

struct PolicyTrainResult {
  Agent agent;
  std::vector<LogRow> log;
  long best_step = -1;
  double best_val_loss = 0.0;
};

// Encoded transition store for one cohort split.
struct TransitionSet {
  std::vector<nn::Vec> states, next_states;
  std::vector<nn::Vec> actions;
  std::vector<float> rewards;
  std::vector<float> terminal;
  std::vector<float> discounts;
  std::size_t size() const { return states.size(); }
};

// Encodes every stay of the requested split with the frozen encoder and
// attaches n-step returns computed from the raw (inverse-scaled) pain
// channel; windows clipped at the stay end carry no bootstrap.
TransitionSet build_transitions(const sim::Cohort& cohort, const pipeline::Scaler& scaler,
                                const nn::GruStack& encoder, const RewardConfig& reward,
                                sim::Split split, int n_step = 1);

// Alternating critic/actor updates on uniform mini-batches; the returned
// agent is the snapshot with the best validation critic loss.
PolicyTrainResult train_policy(const sim::Cohort& cohort, const pipeline::Scaler& scaler,
                               const nn::GruStack& encoder, const RewardConfig& reward,
                               const AgentConfig& config, std::uint64_t seed);

void write_training_log(const std::vector<LogRow>& log, const std::string& path);

// Drives the simulator with the learned policy: standardizes raw
// observations, keeps the recurrent history, and inverse-scales the actor
// output back to dose units.
class AgentPolicy : public sim::Simulator::Policy {
 public:
  AgentPolicy(const nn::GruStack& encoder, const nn::Mlp& actor,
              const pipeline::Scaler& scaler);
  void begin_stay() override;
  nn::Vec act(const nn::Vec& obs, const nn::Vec& last_action) override;

 private:
  HistoryEncoder history_;
  const nn::Mlp* actor_;
  const pipeline::Scaler* scaler_;
};

}  // namespace sedrl::rl
