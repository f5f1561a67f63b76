#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sedrl/common/rng.hpp"
#include "sedrl/nn/mlp.hpp"
#include "sedrl/nn/types.hpp"

namespace sedrl::nn {

// One GRU cell: z = sigma(Wz x + Uz h + bz), r = sigma(Wr x + Ur h + br),
// hc = tanh(Wh x + Uh (r.h) + bh), h' = (1-z).h + z.hc.
template <typename Scalar = float>
struct GruCellT {
  MatT<Scalar> Wz, Wr, Wh;  // hidden x input
  MatT<Scalar> Uz, Ur, Uh;  // hidden x hidden
  MatT<Scalar> bz, br, bh;  // hidden x 1

  int input_dim() const { return static_cast<int>(Wz.cols()); }
  int hidden_dim() const { return static_cast<int>(Wz.rows()); }

  static GruCellT make(int hidden, int input, Rng& rng) {
    GruCellT c;
    c.Wz = orthogonal_init<Scalar>(hidden, input, rng);
    c.Wr = orthogonal_init<Scalar>(hidden, input, rng);
    c.Wh = orthogonal_init<Scalar>(hidden, input, rng);
    c.Uz = orthogonal_init<Scalar>(hidden, hidden, rng);
    c.Ur = orthogonal_init<Scalar>(hidden, hidden, rng);
    c.Uh = orthogonal_init<Scalar>(hidden, hidden, rng);
    c.bz = MatT<Scalar>::Zero(hidden, 1);
    c.br = MatT<Scalar>::Zero(hidden, 1);
    c.bh = MatT<Scalar>::Zero(hidden, 1);
    return c;
  }
};

// Stacked GRU layers plus the two supervised heads: next-observation
// prediction (identity output) and per-step mortality probability (sigmoid).
template <typename Scalar = float>
struct GruStackT {
  std::vector<GruCellT<Scalar>> cells;
  DenseLayerT<Scalar> obs_head;
  DenseLayerT<Scalar> mort_head;

  static GruStackT make(int input_dim, int hidden_dim, int num_layers, int obs_dim,
                        Rng& rng) {
    GruStackT s;
    for (int l = 0; l < num_layers; ++l)
      s.cells.push_back(GruCellT<Scalar>::make(hidden_dim, l == 0 ? input_dim : hidden_dim, rng));
    s.obs_head = DenseLayerT<Scalar>::make(obs_dim, hidden_dim, Activation::kIdentity, rng);
    s.mort_head = DenseLayerT<Scalar>::make(1, hidden_dim, Activation::kSigmoid, rng);
    return s;
  }

  int input_dim() const { return cells.front().input_dim(); }
  int hidden_dim() const { return cells.back().hidden_dim(); }

  ParamRefsT<Scalar> params() {
    ParamRefsT<Scalar> refs;
    for (std::size_t l = 0; l < cells.size(); ++l) {
      const std::string base = "gru.l" + std::to_string(l);
      auto& c = cells[l];
      refs.push_back({base + ".Wz", &c.Wz});
      refs.push_back({base + ".Uz", &c.Uz});
      refs.push_back({base + ".bz", &c.bz});
      refs.push_back({base + ".Wr", &c.Wr});
      refs.push_back({base + ".Ur", &c.Ur});
      refs.push_back({base + ".br", &c.br});
      refs.push_back({base + ".Wh", &c.Wh});
      refs.push_back({base + ".Uh", &c.Uh});
      refs.push_back({base + ".bh", &c.bh});
    }
    refs.push_back({"gru.obs_head.W", &obs_head.weight});
    refs.push_back({"gru.obs_head.b", &obs_head.bias});
    refs.push_back({"gru.mort_head.W", &mort_head.weight});
    refs.push_back({"gru.mort_head.b", &mort_head.bias});
    return refs;
  }
  ParamRefsT<Scalar> params() const { return const_cast<GruStackT*>(this)->params(); }
};

template <typename Scalar = float>
struct GruForwardT {
  std::vector<VecT<Scalar>> states;     // top-layer hidden state after step t
  std::vector<VecT<Scalar>> obs_preds;  // next-observation prediction at step t
  std::vector<Scalar> mort_probs;

  struct StepCache {
    VecT<Scalar> x, h_prev, z, r, hc, h;
  };
  std::vector<std::vector<StepCache>> cache;  // [t][layer]
};

// Consumes the input sequence from the all-zero hidden state. Empty input
// yields empty outputs. Supports warm starts through h0 for incremental
// history encoding.
template <typename Scalar>
GruForwardT<Scalar> gru_forward(const GruStackT<Scalar>& stack,
                                const std::vector<VecT<Scalar>>& inputs,
                                const std::vector<VecT<Scalar>>* h0 = nullptr) {
  GruForwardT<Scalar> out;
  const int num_layers = static_cast<int>(stack.cells.size());
  const int hidden = stack.hidden_dim();
  std::vector<VecT<Scalar>> h(num_layers, VecT<Scalar>::Zero(hidden));
  if (h0) h = *h0;

  for (const auto& input : inputs) {
    if (input.size() != stack.input_dim())
      throw std::invalid_argument("gru_forward: input dimension mismatch");
    std::vector<typename GruForwardT<Scalar>::StepCache> step(num_layers);
    VecT<Scalar> x = input;
    for (int l = 0; l < num_layers; ++l) {
      const auto& c = stack.cells[l];
      auto& sc = step[l];
      sc.x = x;
      sc.h_prev = h[l];
      sc.z = (Scalar(1) / (Scalar(1) + (-(c.Wz * x + c.Uz * h[l] + c.bz.col(0)).array()).exp()))
                 .matrix();
      sc.r = (Scalar(1) / (Scalar(1) + (-(c.Wr * x + c.Ur * h[l] + c.br.col(0)).array()).exp()))
                 .matrix();
      sc.hc = (c.Wh * x + c.Uh * sc.r.cwiseProduct(h[l]) + c.bh.col(0)).array().tanh().matrix();
      sc.h = (Scalar(1) - sc.z.array()).matrix().cwiseProduct(h[l]) + sc.z.cwiseProduct(sc.hc);
      h[l] = sc.h;
      x = sc.h;
    }
    out.cache.push_back(std::move(step));
    out.states.push_back(h[num_layers - 1]);
    const VecT<Scalar>& top = h[num_layers - 1];
    out.obs_preds.push_back(stack.obs_head.weight * top + stack.obs_head.bias.col(0));
    const Scalar m_pre = (stack.mort_head.weight * top + stack.mort_head.bias.col(0))(0);
    out.mort_probs.push_back(Scalar(1) / (Scalar(1) + std::exp(-m_pre)));
  }
  return out;
}

// Backpropagation through time over the recorded forward pass. d_states[t]
// is the loss gradient injected at the top-layer hidden state of step t
// (head gradients are the caller's responsibility and enter through here).
// Returned
// gradients cover the cell parameters only, in the same order as the cell
// portion of GruStackT::params().
template <typename Scalar>
GradListT<Scalar> gru_backward(const GruStackT<Scalar>& stack, const GruForwardT<Scalar>& fwd,
                               const std::vector<VecT<Scalar>>& d_states) {
  const int num_layers = static_cast<int>(stack.cells.size());
  const int hidden = stack.hidden_dim();
  const int steps = static_cast<int>(fwd.cache.size());
  if (static_cast<int>(d_states.size()) != steps)
    throw std::invalid_argument("gru_backward: d_states length mismatch");

  GradListT<Scalar> grads;
  for (const auto& c : stack.cells) {
    grads.emplace_back(MatT<Scalar>::Zero(c.Wz.rows(), c.Wz.cols()));
    grads.emplace_back(MatT<Scalar>::Zero(c.Uz.rows(), c.Uz.cols()));
    grads.emplace_back(MatT<Scalar>::Zero(hidden, 1));
    grads.emplace_back(MatT<Scalar>::Zero(c.Wr.rows(), c.Wr.cols()));
    grads.emplace_back(MatT<Scalar>::Zero(c.Ur.rows(), c.Ur.cols()));
    grads.emplace_back(MatT<Scalar>::Zero(hidden, 1));
    grads.emplace_back(MatT<Scalar>::Zero(c.Wh.rows(), c.Wh.cols()));
    grads.emplace_back(MatT<Scalar>::Zero(c.Uh.rows(), c.Uh.cols()));
    grads.emplace_back(MatT<Scalar>::Zero(hidden, 1));
  }

  std::vector<VecT<Scalar>> dh_carry(num_layers, VecT<Scalar>::Zero(hidden));

  for (int t = steps - 1; t >= 0; --t) {
    VecT<Scalar> dh_from_above;
    for (int l = num_layers - 1; l >= 0; --l) {
      const auto& c = stack.cells[l];
      const auto& sc = fwd.cache[t][l];
      VecT<Scalar> dh = dh_carry[l];
      if (l == num_layers - 1) dh += d_states[t];
      if (l < num_layers - 1) dh += dh_from_above;

      const VecT<Scalar> dhc = dh.cwiseProduct(sc.z);
      const VecT<Scalar> dz = dh.cwiseProduct(sc.hc - sc.h_prev);
      VecT<Scalar> dh_prev = dh.cwiseProduct((Scalar(1) - sc.z.array()).matrix());

      const VecT<Scalar> da_c = dhc.cwiseProduct((Scalar(1) - sc.hc.array().square()).matrix());
      const VecT<Scalar> d_rh = c.Uh.transpose() * da_c;
      const VecT<Scalar> dr = d_rh.cwiseProduct(sc.h_prev);
      dh_prev += d_rh.cwiseProduct(sc.r);

      const VecT<Scalar> da_z =
          dz.cwiseProduct((sc.z.array() * (Scalar(1) - sc.z.array())).matrix());
      const VecT<Scalar> da_r =
          dr.cwiseProduct((sc.r.array() * (Scalar(1) - sc.r.array())).matrix());
      dh_prev += c.Uz.transpose() * da_z + c.Ur.transpose() * da_r;

      const int g = 9 * l;
      grads[g + 0] += da_z * sc.x.transpose();
      grads[g + 1] += da_z * sc.h_prev.transpose();
      grads[g + 2].col(0) += da_z;
      grads[g + 3] += da_r * sc.x.transpose();
      grads[g + 4] += da_r * sc.h_prev.transpose();
      grads[g + 5].col(0) += da_r;
      grads[g + 6] += da_c * sc.x.transpose();
      grads[g + 7] += da_c * sc.r.cwiseProduct(sc.h_prev).transpose();
      grads[g + 8].col(0) += da_c;

      dh_carry[l] = dh_prev;
      if (l > 0)
        dh_from_above =
            c.Wz.transpose() * da_z + c.Wr.transpose() * da_r + c.Wh.transpose() * da_c;
    }
  }
  return grads;
}

using GruCell = GruCellT<float>;
using GruStack = GruStackT<float>;
using GruForward = GruForwardT<float>;

}  // namespace sedrl::nn
