#include "sedrl/rl/agent.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sedrl/common/csv.hpp"

namespace sedrl::rl {

using nn::Mat;
using nn::Vec;
using sim::Split;

Agent Agent::make(const AgentConfig& config, Rng& rng) {
  Agent agent;
  agent.config = config;
  const std::vector<int> critic_sizes{config.state_dim + config.action_dim, config.hidden,
                                      config.hidden, 1};
  const std::vector<int> actor_sizes{config.state_dim, config.hidden, config.hidden,
                                     config.action_dim};
  agent.critic1 = nn::Mlp("critic1", critic_sizes, nn::Activation::kLeakyRelu,
                          nn::Activation::kIdentity, rng);
  agent.critic2 = nn::Mlp("critic2", critic_sizes, nn::Activation::kLeakyRelu,
                          nn::Activation::kIdentity, rng);
  agent.actor = nn::Mlp("actor", actor_sizes, nn::Activation::kLeakyRelu,
                        nn::Activation::kSigmoid, rng);
  agent.target1 = agent.critic1;
  agent.target2 = agent.critic2;
  agent.target_actor = agent.actor;
  const auto lr = static_cast<float>(config.lr);
  agent.opt_c1 = nn::AdamState::init_for(agent.critic1.params(), lr);
  agent.opt_c2 = nn::AdamState::init_for(agent.critic2.params(), lr);
  agent.opt_actor = nn::AdamState::init_for(agent.actor.params(), lr);
  return agent;
}

namespace {

Mat concat_cols(const Mat& a, const Mat& b) {
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

Eigen::VectorXf bellman_targets(const TransitionBatch& batch, const Agent& agent) {
  const Mat next_actions = agent.target_actor.forward(batch.next_states);
  const Mat x = concat_cols(batch.next_states, next_actions);
  const Eigen::VectorXf q1 = agent.target1.forward(x).col(0);
  const Eigen::VectorXf q2 = agent.target2.forward(x).col(0);
  const Eigen::VectorXf pessimistic = q1.cwiseMin(q2);
  if (batch.discounts.size() > 0)
    return batch.rewards.array() + batch.discounts.array() * pessimistic.array();
  return batch.rewards.array() + static_cast<float>(agent.config.gamma) *
                                     (1.0f - batch.terminal.array()) * pessimistic.array();
}

CriticLosses critic_update(const TransitionBatch& batch, Agent& agent) {
  const Eigen::VectorXf y = bellman_targets(batch, agent);
  const Mat x = concat_cols(batch.states, batch.actions);
  const auto inv_b = 1.0f / static_cast<float>(x.rows());

  CriticLosses losses;
  auto update = [&](nn::Mlp& critic, nn::AdamState& opt) -> double {
    nn::MlpCache cache;
    const Eigen::VectorXf q = critic.forward(x, &cache).col(0);
    const Eigen::VectorXf err = q - y;
    const double loss = err.squaredNorm() * inv_b;
    if (!std::isfinite(loss)) throw std::runtime_error("critic_update: loss diverged (NaN)");
    const Mat d_out = (2.0f * inv_b) * err;
    nn::GradList grads = critic.backward(cache, d_out);
    nn::clip_grad_norm(grads, agent.config.clip_norm);
    nn::adam_step(critic.params(), grads, opt);
    return loss;
  };
  losses.critic1 = update(agent.critic1, agent.opt_c1);
  losses.critic2 = update(agent.critic2, agent.opt_c2);
  return losses;
}

ActorStats actor_update(const TransitionBatch& batch, Agent& agent) {
  const auto b = static_cast<int>(batch.states.rows());
  const auto inv_b = 1.0f / static_cast<float>(b);

  ActorStats stats;
  stats.mean_abs_q =
      agent.critic1.forward(concat_cols(batch.states, batch.actions)).cwiseAbs().mean();
  stats.lambda = stats.mean_abs_q > 0.0 ? agent.config.alpha / stats.mean_abs_q
                                        : agent.config.alpha;  // division-by-zero guard

  nn::MlpCache actor_cache;
  const Mat proposed = agent.actor.forward(batch.states, &actor_cache);
  nn::MlpCache critic_cache;
  const Eigen::VectorXf q_pi =
      agent.critic1.forward(concat_cols(batch.states, proposed), &critic_cache).col(0);
  const Mat residual = proposed - batch.actions;
  stats.loss = -stats.lambda * q_pi.mean() + residual.cwiseAbs2().sum() * inv_b;
  if (!std::isfinite(stats.loss)) throw std::runtime_error("actor_update: loss diverged (NaN)");

  // Value gradient flows through the frozen critic into its action inputs.
  Mat d_critic_in;
  const Mat d_q = Mat::Constant(b, 1, -static_cast<float>(stats.lambda) * inv_b);
  agent.critic1.backward(critic_cache, d_q, &d_critic_in);
  const Mat d_proposed =
      d_critic_in.rightCols(agent.config.action_dim) + (2.0f * inv_b) * residual;

  nn::GradList grads = agent.actor.backward(actor_cache, d_proposed);
  nn::clip_grad_norm(grads, agent.config.clip_norm);
  nn::adam_step(agent.actor.params(), grads, agent.opt_actor);

  const auto kappa = static_cast<float>(agent.config.kappa);
  nn::polyak_update(agent.target1.params(), agent.critic1.params(), kappa);
  nn::polyak_update(agent.target2.params(), agent.critic2.params(), kappa);
  nn::polyak_update(agent.target_actor.params(), agent.actor.params(), kappa);
  return stats;
}

TransitionSet build_transitions(const sim::Cohort& cohort, const pipeline::Scaler& scaler,
                                const nn::GruStack& encoder, const RewardConfig& reward,
                                Split split, int n_step) {
  if (n_step < 1) throw std::invalid_argument("build_transitions: n_step must be >= 1");
  TransitionSet set;
  const auto gamma = reward.gamma;
  for (const auto& traj : cohort.stays) {
    const auto it = cohort.split.find(traj.stay_id);
    if (it == cohort.split.end() || it->second != split) continue;
    const std::vector<Vec> states = encode_trajectory(encoder, traj);
    const int T = traj.length();

    std::vector<double> pain(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
      pain[static_cast<std::size_t>(t)] =
          scaler.inverse_obs(traj.steps[static_cast<std::size_t>(t)].obs)(sim::kPainIdx);
    const std::vector<double> rewards = compute_rewards(pain, traj.mortality, reward);

    for (int t = 0; t < T; ++t) {
      set.states.push_back(states[static_cast<std::size_t>(t)]);
      set.actions.push_back(traj.steps[static_cast<std::size_t>(t)].action);

      const int window = std::min(n_step, T - t);
      double g = 0.0, disc = 1.0;
      for (int k = 0; k < window; ++k, disc *= gamma)
        g += disc * rewards[static_cast<std::size_t>(t + k)];
      set.rewards.push_back(static_cast<float>(g));

      const bool clipped = (t + n_step >= T);  // window reached the stay end
      set.terminal.push_back(clipped ? 1.0f : 0.0f);
      set.discounts.push_back(clipped ? 0.0f : static_cast<float>(disc));
      set.next_states.push_back(clipped ? Vec::Zero(states[0].size()).eval()
                                        : states[static_cast<std::size_t>(t + n_step)]);
    }
  }
  return set;
}

namespace {

TransitionBatch gather(const TransitionSet& set, const std::vector<std::size_t>& idx) {
  TransitionBatch batch;
  const auto b = static_cast<Eigen::Index>(idx.size());
  const auto ds = static_cast<Eigen::Index>(set.states[0].size());
  const auto da = static_cast<Eigen::Index>(set.actions[0].size());
  batch.states.resize(b, ds);
  batch.next_states.resize(b, ds);
  batch.actions.resize(b, da);
  batch.rewards.resize(b);
  batch.terminal.resize(b);
  batch.discounts.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const std::size_t j = idx[static_cast<std::size_t>(i)];
    batch.states.row(i) = set.states[j].transpose();
    batch.next_states.row(i) = set.next_states[j].transpose();
    batch.actions.row(i) = set.actions[j].transpose();
    batch.rewards(i) = set.rewards[j];
    batch.terminal(i) = set.terminal[j];
    batch.discounts(i) = set.discounts[j];
  }
  return batch;
}

double validation_critic_loss(const TransitionBatch& batch, const Agent& agent) {
  const Eigen::VectorXf y = bellman_targets(batch, agent);
  const Eigen::VectorXf q =
      agent.critic1.forward(concat_cols(batch.states, batch.actions)).col(0);
  return (q - y).squaredNorm() / static_cast<double>(batch.states.rows());
}

}  // namespace

PolicyTrainResult train_policy(const sim::Cohort& cohort, const pipeline::Scaler& scaler,
                               const nn::GruStack& encoder, const RewardConfig& reward,
                               const AgentConfig& config, std::uint64_t seed) {
  const TransitionSet train = build_transitions(cohort, scaler, encoder, reward, Split::kTrain, config.n_step);
  const TransitionSet val =
      build_transitions(cohort, scaler, encoder, reward, Split::kValidation, config.n_step);
  if (train.size() < static_cast<std::size_t>(config.batch_size))
    throw std::runtime_error("train_policy: too few training transitions");
  if (val.size() == 0) throw std::runtime_error("train_policy: empty validation split");

  Rng init_rng(derive_seed(seed, "agent-init"));
  PolicyTrainResult result;
  result.agent = Agent::make(config, init_rng);

  // Fixed validation batch so eval numbers are comparable across steps.
  std::vector<std::size_t> val_idx(std::min<std::size_t>(val.size(), 4096));
  for (std::size_t i = 0; i < val_idx.size(); ++i)
    val_idx[i] = i * (val.size() / val_idx.size());
  const TransitionBatch val_batch = gather(val, val_idx);

  Rng batch_rng(derive_seed(seed, "agent-batches"));
  std::vector<std::size_t> idx(static_cast<std::size_t>(config.batch_size));
  result.best_val_loss = 1e300;
  for (long step = 1; step <= config.steps; ++step) {
    for (auto& j : idx) j = batch_rng.uniform_int(train.size());
    const TransitionBatch batch = gather(train, idx);
    const CriticLosses critic_losses = critic_update(batch, result.agent);
    const ActorStats actor_stats = actor_update(batch, result.agent);

    const bool eval_now = (step % config.eval_every == 0) || step == config.steps;
    if (step % config.log_every == 0 || eval_now || step == 1) {
      LogRow row;
      row.step = step;
      row.critic1_loss = critic_losses.critic1;
      row.critic2_loss = critic_losses.critic2;
      row.actor_loss = actor_stats.loss;
      row.lambda = actor_stats.lambda;
      row.mean_abs_q = actor_stats.mean_abs_q;
      if (eval_now) {
        // Diagnostic only: TD error grows as the actor moves off the data,
        // so it cannot drive model selection. The final agent is returned.
        row.val_loss = validation_critic_loss(val_batch, result.agent);
        if (row.val_loss < result.best_val_loss) {
          result.best_val_loss = row.val_loss;
          result.best_step = step;
        }
      }
      result.log.push_back(row);
    }
  }
  return result;
}

void write_training_log(const std::vector<LogRow>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "step,critic1_loss,critic2_loss,actor_loss,lambda,mean_abs_q,val_loss\n";
  for (const auto& row : log) {
    out << row.step << ',' << format_number(row.critic1_loss) << ','
        << format_number(row.critic2_loss) << ',' << format_number(row.actor_loss) << ','
        << format_number(row.lambda) << ',' << format_number(row.mean_abs_q) << ',';
    if (std::isfinite(row.val_loss)) out << format_number(row.val_loss);
    out << '\n';
  }
}

AgentPolicy::AgentPolicy(const nn::GruStack& encoder, const nn::Mlp& actor,
                         const pipeline::Scaler& scaler)
    : history_(encoder), actor_(&actor), scaler_(&scaler) {}

void AgentPolicy::begin_stay() { history_.reset(); }

Vec AgentPolicy::act(const Vec& obs, const Vec& last_action) {
  const Vec state =
      history_.step(scaler_->transform_obs(obs), scaler_->transform_action(last_action));
  const Mat proposed = actor_->forward(state.transpose());
  return scaler_->inverse_action(proposed.row(0).transpose());
}

}  // namespace sedrl::rl
