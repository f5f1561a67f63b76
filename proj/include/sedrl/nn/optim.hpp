#pragma once

#include <cmath>
#include <stdexcept>

#include "sedrl/common/rng.hpp"
#include "sedrl/nn/types.hpp"

namespace sedrl::nn {

// Orthogonal initialization: rows orthonormal when rows <= cols, columns
// orthonormal otherwise. QR of a tall Gaussian matrix with the sign of
// diag(R) fixed, which makes the factor unique and the init deterministic
// for a given generator state.
template <typename Scalar = float>
MatT<Scalar> orthogonal_init(int rows, int cols, Rng& rng, Scalar gain = Scalar(1)) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("orthogonal_init: empty shape");
  const int n = std::max(rows, cols);
  const int k = std::min(rows, cols);

  Eigen::MatrixXd a(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = rng.normal();

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k);
  for (int j = 0; j < k; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);

  Eigen::MatrixXd out = (rows >= cols) ? q : Eigen::MatrixXd(q.transpose());
  return gain * out.cast<Scalar>();
}

// Global L2 norm accumulated in double.
template <typename Scalar>
double global_norm(const GradListT<Scalar>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

// In-place global-norm clipping at max_norm (0.5 per the network defaults).
template <typename Scalar>
void clip_grad_norm(GradListT<Scalar>& grads, double max_norm = 0.5) {
  const double norm = global_norm(grads);
  if (norm <= max_norm) return;
  // The factor sits a few ulps below max_norm/norm; plain rounding can land
  // the clipped norm marginally above the bound in 32-bit arithmetic.
  const Scalar scale = static_cast<Scalar>((max_norm / norm) * (1.0 - 1e-7));
  for (auto& g : grads) g *= scale;
}

// target <- (1 - kappa) * target + kappa * online, elementwise.
template <typename Scalar>
void polyak_update(ParamRefsT<Scalar> target, const ParamRefsT<Scalar>& online,
                   Scalar kappa = Scalar(0.005)) {
  if (target.size() != online.size())
    throw std::invalid_argument("polyak_update: tensor count mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    MatT<Scalar>& t = *target[i].tensor;
    const MatT<Scalar>& o = *online[i].tensor;
    if (t.rows() != o.rows() || t.cols() != o.cols())
      throw std::invalid_argument("polyak_update: shape mismatch at " + target[i].name);
    t = (Scalar(1) - kappa) * t + kappa * o;
  }
}

template <typename Scalar = float>
struct AdamStateT {
  long step = 0;
  Scalar lr = Scalar(1e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
  GradListT<Scalar> m;  // first moments, same shapes as the parameters
  GradListT<Scalar> v;  // second moments

  static AdamStateT init_for(const ParamRefsT<Scalar>& params, Scalar lr = Scalar(1e-4)) {
    AdamStateT s;
    s.lr = lr;
    s.m = zero_grads_like(params);
    s.v = zero_grads_like(params);
    return s;
  }
};

using AdamState = AdamStateT<float>;

// One bias-corrected Adam update in place.
template <typename Scalar>
void adam_step(ParamRefsT<Scalar> params, const GradListT<Scalar>& grads,
               AdamStateT<Scalar>& state) {
  check_shapes(params, grads);
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam: uninitialized state");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(static_cast<double>(state.beta1), state.step);
  const double bc2 = 1.0 - std::pow(static_cast<double>(state.beta2), state.step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    m = state.beta1 * m + (Scalar(1) - state.beta1) * grads[i];
    v = (state.beta2 * v.array() + (Scalar(1) - state.beta2) * grads[i].array().square())
            .matrix();
    const auto m_hat = m.array() / static_cast<Scalar>(bc1);
    const auto v_hat = v.array() / static_cast<Scalar>(bc2);
    params[i].tensor->array() -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
  }
}

}  // namespace sedrl::nn
