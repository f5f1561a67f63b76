#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "sedrl/nn/gru.hpp"
#include "sedrl/sim/cohort.hpp"

namespace sedrl::rl {

struct EncoderConfig {
  int hidden = 64;
  int layers = 2;
  int epochs = 30;
  double lr = 1e-4;
  double mort_weight = 0.2;
  double clip_norm = 0.5;
  int bptt_cap = 256;  // longest sequence unrolled in one update
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EncoderConfig, hidden, layers, epochs, lr,
                                                mort_weight, clip_norm, bptt_cap)

struct EncoderBundle {
  nn::GruStack gru;
};

struct EncoderTrainResult {
  EncoderBundle encoder;
  std::vector<double> train_losses;  // per epoch
  std::vector<double> val_losses;
  int best_epoch = -1;
};

// Recurrent input at step t is (o_t, a_{t-1}) with a zero action at t = 0,
// so the state summarizing h_t never contains the action chosen at t.
std::vector<nn::Vec> encoder_inputs(const sim::Trajectory& traj);

// Supervised representation learning: predict the next observation and the
// stay mortality label at every non-final step. Model selection picks the
// epoch with the lowest validation loss. Throws on divergence (NaN loss).
EncoderTrainResult train_encoder(const sim::Cohort& cohort, const EncoderConfig& config,
                                 std::uint64_t seed);

// Loss of one trajectory under the current parameters (forward only).
double encoder_loss(const nn::GruStack& gru, const sim::Trajectory& traj, double mort_weight);

// State vectors s_0..s_{T-1} for a full trajectory.
std::vector<nn::Vec> encode_trajectory(const nn::GruStack& gru, const sim::Trajectory& traj);

// s_t from an explicit prefix o_0..o_t, a_0..a_{t-1}. Throws on an empty
// prefix or an action count other than observations-1.
nn::Vec encode_history(const nn::GruStack& gru, const std::vector<nn::Vec>& observations,
                       const std::vector<nn::Vec>& actions);

// Incremental encoding for rollouts: feed one (observation, previous
// action) pair per hour; matches the full-sequence forward exactly.
class HistoryEncoder {
 public:
  explicit HistoryEncoder(const nn::GruStack& gru);
  void reset();
  nn::Vec step(const nn::Vec& obs, const nn::Vec& prev_action);

 private:
  const nn::GruStack* gru_;
  std::vector<nn::Vec> hidden_;
};

}  // namespace sedrl::rl
