#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace sedrl::nn {

// Dense types are templated on the scalar so the same code runs in float
// for training and in double for finite-difference verification. Production
// parameters are 32-bit; norms and loss accumulation always run in 64-bit.
template <typename Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatT<float>;
using Vec = VecT<float>;

enum class Activation { kTanh, kLeakyRelu, kSigmoid, kIdentity };

constexpr double kLeakySlope = 0.01;

template <typename Scalar>
MatT<Scalar> activate(const MatT<Scalar>& x, Activation act) {
  switch (act) {
    case Activation::kTanh:
      return x.array().tanh().matrix();
    case Activation::kLeakyRelu:
      return x.array().max(x.array() * Scalar(kLeakySlope)).matrix();
    case Activation::kSigmoid:
      return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
    case Activation::kIdentity:
      return x;
  }
  throw std::logic_error("unknown activation");
}

// Derivative expressed through the activation output y = f(x).
template <typename Scalar>
MatT<Scalar> activate_grad(const MatT<Scalar>& y, const MatT<Scalar>& x, Activation act) {
  switch (act) {
    case Activation::kTanh:
      return (Scalar(1) - y.array().square()).matrix();
    case Activation::kLeakyRelu:
      return (x.array() > Scalar(0))
          .select(MatT<Scalar>::Ones(x.rows(), x.cols()),
                  MatT<Scalar>::Constant(x.rows(), x.cols(), Scalar(kLeakySlope)));
    case Activation::kSigmoid:
      return (y.array() * (Scalar(1) - y.array())).matrix();
    case Activation::kIdentity:
      return MatT<Scalar>::Ones(x.rows(), x.cols());
  }
  throw std::logic_error("unknown activation");
}

// A parameter set is an ordered list of named tensors. Gradients and Adam
// moments mirror the same order and shapes.
template <typename Scalar>
struct ParamRefT {
  std::string name;
  MatT<Scalar>* tensor;
};

template <typename Scalar>
using ParamRefsT = std::vector<ParamRefT<Scalar>>;
template <typename Scalar>
using GradListT = std::vector<MatT<Scalar>>;

using ParamRefs = ParamRefsT<float>;
using GradList = GradListT<float>;

template <typename Scalar>
GradListT<Scalar> zero_grads_like(const ParamRefsT<Scalar>& params) {
  GradListT<Scalar> g;
  g.reserve(params.size());
  for (const auto& p : params)
    g.emplace_back(MatT<Scalar>::Zero(p.tensor->rows(), p.tensor->cols()));
  return g;
}

template <typename Scalar>
void check_shapes(const ParamRefsT<Scalar>& params, const GradListT<Scalar>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].tensor->rows() != grads[i].rows() ||
        params[i].tensor->cols() != grads[i].cols())
      throw std::invalid_argument("shape mismatch for tensor " + params[i].name);
  }
}

}  // namespace sedrl::nn
