#include "sedrl/rl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sedrl/nn/optim.hpp"

namespace sedrl::rl {

using nn::GruStack;
using nn::Mat;
using nn::Vec;
using sim::Split;

namespace {

constexpr float kProbEps = 1e-7f;

double bce(double label, double prob) {
  const double p = std::clamp(prob, static_cast<double>(kProbEps), 1.0 - kProbEps);
  return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

struct TrajGrads {
  nn::GradList grads;  // full params() order: cells then heads
  double loss = 0.0;
};

// Loss and gradients of one trajectory. The combined objective is averaged
// over the T-1 non-final steps.
TrajGrads backward_trajectory(const GruStack& gru, const sim::Trajectory& traj,
                              double mort_weight, int bptt_cap) {
  std::vector<Vec> inputs = encoder_inputs(traj);
  if (static_cast<int>(inputs.size()) > bptt_cap) inputs.resize(bptt_cap);
  const int T = static_cast<int>(inputs.size());
  if (T < 2) throw std::invalid_argument("encoder: trajectory shorter than 2 steps");

  const nn::GruForward fwd = gru_forward(gru, inputs);
  const auto m = static_cast<float>(traj.mortality);
  const float inv_steps = 1.0f / static_cast<float>(T - 1);

  TrajGrads out;
  Mat d_obs_w = Mat::Zero(gru.obs_head.weight.rows(), gru.obs_head.weight.cols());
  Mat d_obs_b = Mat::Zero(gru.obs_head.bias.rows(), 1);
  Mat d_mort_w = Mat::Zero(gru.mort_head.weight.rows(), gru.mort_head.weight.cols());
  Mat d_mort_b = Mat::Zero(1, 1);
  std::vector<Vec> d_states(static_cast<std::size_t>(T),
                            Vec::Zero(gru.hidden_dim()));

  for (int t = 0; t + 1 < T; ++t) {
    const Vec& target = traj.steps[static_cast<std::size_t>(t) + 1].obs;
    const Vec err = fwd.obs_preds[static_cast<std::size_t>(t)] - target;
    out.loss += err.squaredNorm() * inv_steps;
    const Vec d_pred = 2.0f * inv_steps * err;
    d_obs_w += d_pred * fwd.states[static_cast<std::size_t>(t)].transpose();
    d_obs_b += d_pred;
    d_states[static_cast<std::size_t>(t)] += gru.obs_head.weight.transpose() * d_pred;

    const float prob = fwd.mort_probs[static_cast<std::size_t>(t)];
    out.loss += mort_weight * bce(m, prob) * inv_steps;
    // Sigmoid + BCE collapses to (prob - label) on the pre-activation.
    const float d_pre =
        static_cast<float>(mort_weight) * inv_steps * (std::clamp(prob, kProbEps, 1.0f - kProbEps) - m);
    d_mort_w += d_pre * fwd.states[static_cast<std::size_t>(t)].transpose();
    d_mort_b(0, 0) += d_pre;
    d_states[static_cast<std::size_t>(t)] += gru.mort_head.weight.transpose() * d_pre;
  }

  out.grads = gru_backward(gru, fwd, d_states);
  out.grads.push_back(std::move(d_obs_w));
  out.grads.push_back(std::move(d_obs_b));
  out.grads.push_back(std::move(d_mort_w));
  out.grads.push_back(std::move(d_mort_b));
  return out;
}

}  // namespace

std::vector<Vec> encoder_inputs(const sim::Trajectory& traj) {
  std::vector<Vec> inputs;
  inputs.reserve(traj.steps.size());
  Vec prev_action = Vec::Zero(sim::kNumActions);
  for (const auto& step : traj.steps) {
    Vec x(sim::kNumObs + sim::kNumActions);
    x << step.obs, prev_action;
    inputs.push_back(std::move(x));
    prev_action = step.action;
  }
  return inputs;
}

double encoder_loss(const GruStack& gru, const sim::Trajectory& traj, double mort_weight) {
  const std::vector<Vec> inputs = encoder_inputs(traj);
  const int T = static_cast<int>(inputs.size());
  if (T < 2) throw std::invalid_argument("encoder: trajectory shorter than 2 steps");
  const nn::GruForward fwd = gru_forward(gru, inputs);
  double loss = 0.0;
  for (int t = 0; t + 1 < T; ++t) {
    loss += (fwd.obs_preds[static_cast<std::size_t>(t)] -
             traj.steps[static_cast<std::size_t>(t) + 1].obs)
                .squaredNorm();
    loss += mort_weight * bce(traj.mortality, fwd.mort_probs[static_cast<std::size_t>(t)]);
  }
  return loss / (T - 1);
}

EncoderTrainResult train_encoder(const sim::Cohort& cohort, const EncoderConfig& config,
                                 std::uint64_t seed) {
  std::vector<const sim::Trajectory*> train, val;
  for (const auto& traj : cohort.stays) {
    const auto it = cohort.split.find(traj.stay_id);
    if (it == cohort.split.end()) continue;
    if (it->second == Split::kTrain) train.push_back(&traj);
    if (it->second == Split::kValidation) val.push_back(&traj);
  }
  if (train.empty() || val.empty())
    throw std::runtime_error("train_encoder: need labeled train and validation stays");

  Rng init_rng(derive_seed(seed, "encoder-init"));
  EncoderTrainResult result;
  GruStack gru = GruStack::make(sim::kNumObs + sim::kNumActions, config.hidden, config.layers,
                                sim::kNumObs, init_rng);
  GruStack best = gru;
  nn::AdamState opt = nn::AdamState::init_for(gru.params(), static_cast<float>(config.lr));

  Rng order_rng(derive_seed(seed, "encoder-order"));
  double best_val = 1e300;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<const sim::Trajectory*> order = train;
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      std::swap(order[i], order[i + order_rng.uniform_int(order.size() - i)]);

    double train_loss = 0.0;
    for (const auto* traj : order) {
      TrajGrads tg = backward_trajectory(gru, *traj, config.mort_weight, config.bptt_cap);
      if (!std::isfinite(tg.loss))
        throw std::runtime_error("train_encoder: loss diverged (NaN) at epoch " +
                                 std::to_string(epoch));
      train_loss += tg.loss;
      nn::clip_grad_norm(tg.grads, config.clip_norm);
      nn::adam_step(gru.params(), tg.grads, opt);
    }
    result.train_losses.push_back(train_loss / static_cast<double>(order.size()));

    double val_loss = 0.0;
    for (const auto* traj : val) val_loss += encoder_loss(gru, *traj, config.mort_weight);
    val_loss /= static_cast<double>(val.size());
    result.val_losses.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_epoch = epoch;
      best = gru;  // parameter snapshot at every improvement
    }
  }

  result.encoder.gru = std::move(best);
  return result;
}

std::vector<Vec> encode_trajectory(const GruStack& gru, const sim::Trajectory& traj) {
  return gru_forward(gru, encoder_inputs(traj)).states;
}

Vec encode_history(const GruStack& gru, const std::vector<Vec>& observations,
                   const std::vector<Vec>& actions) {
  if (observations.empty()) throw std::invalid_argument("encode_history: empty prefix");
  if (actions.size() + 1 != observations.size())
    throw std::invalid_argument("encode_history: need one action per step except the last");
  std::vector<Vec> inputs;
  inputs.reserve(observations.size());
  for (std::size_t t = 0; t < observations.size(); ++t) {
    Vec x(sim::kNumObs + sim::kNumActions);
    x << observations[t], (t == 0 ? Vec::Zero(sim::kNumActions).eval() : actions[t - 1]);
    inputs.push_back(std::move(x));
  }
  return gru_forward(gru, inputs).states.back();
}

HistoryEncoder::HistoryEncoder(const GruStack& gru) : gru_(&gru) { reset(); }

void HistoryEncoder::reset() {
  hidden_.assign(gru_->cells.size(), Vec::Zero(gru_->hidden_dim()));
}

Vec HistoryEncoder::step(const Vec& obs, const Vec& prev_action) {
  Vec x(sim::kNumObs + sim::kNumActions);
  x << obs, prev_action;
  const nn::GruForward fwd = gru_forward(*gru_, {x}, &hidden_);
  for (std::size_t l = 0; l < hidden_.size(); ++l) hidden_[l] = fwd.cache[0][l].h;
  return fwd.states[0];
}

}  // namespace sedrl::rl
