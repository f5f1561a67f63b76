#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sedrl/common/rng.hpp"
#include "sedrl/nn/optim.hpp"
#include "sedrl/nn/types.hpp"

namespace sedrl::nn {

template <typename Scalar = float>
struct DenseLayerT {
  MatT<Scalar> weight;  // out x in
  MatT<Scalar> bias;    // out x 1
  Activation act = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }

  static DenseLayerT make(int out, int in, Activation act, Rng& rng,
                          Scalar gain = Scalar(1)) {
    DenseLayerT l;
    l.weight = orthogonal_init<Scalar>(out, in, rng, gain);
    l.bias = MatT<Scalar>::Zero(out, 1);
    l.act = act;
    return l;
  }
};

template <typename Scalar = float>
struct MlpCacheT {
  std::vector<MatT<Scalar>> pre;   // pre-activations per layer, batch x out
  std::vector<MatT<Scalar>> post;  // post[0] = input, post[l+1] = layer l output
};

// Plain feed-forward stack; rows of the input matrix are batch samples.
template <typename Scalar = float>
class MlpT {
 public:
  MlpT() = default;
  // sizes = {in, h1, ..., out}; hidden layers use hidden_act, last uses out_act.
  MlpT(std::string name, const std::vector<int>& sizes, Activation hidden_act,
       Activation out_act, Rng& rng)
      : name_(std::move(name)) {
    if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least one layer");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      const bool last = (i + 2 == sizes.size());
      layers_.push_back(DenseLayerT<Scalar>::make(sizes[i + 1], sizes[i],
                                                  last ? out_act : hidden_act, rng));
    }
  }

  MatT<Scalar> forward(const MatT<Scalar>& x, MlpCacheT<Scalar>* cache = nullptr) const {
    if (x.cols() != in_dim()) throw std::invalid_argument("mlp: input dim mismatch");
    if (cache) {
      cache->pre.clear();
      cache->post.clear();
      cache->post.push_back(x);
    }
    MatT<Scalar> h = x;
    for (const auto& l : layers_) {
      MatT<Scalar> pre = (h * l.weight.transpose()).rowwise() + l.bias.col(0).transpose();
      h = activate<Scalar>(pre, l.act);
      if (cache) {
        cache->pre.push_back(std::move(pre));
        cache->post.push_back(h);
      }
    }
    return h;
  }

  // d_out: gradient of the scalar loss wrt the output batch. Returns
  // gradients in params() order; d_input optionally receives the gradient
  // wrt the input batch (used to reach the actor through a frozen critic).
  GradListT<Scalar> backward(const MlpCacheT<Scalar>& cache, const MatT<Scalar>& d_out,
                             MatT<Scalar>* d_input = nullptr) const {
    if (cache.pre.size() != layers_.size())
      throw std::invalid_argument("mlp: cache does not match network");
    GradListT<Scalar> grads(2 * layers_.size());
    MatT<Scalar> d = d_out;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
      const auto& layer = layers_[l];
      const MatT<Scalar> d_pre =
          d.cwiseProduct(activate_grad<Scalar>(cache.post[l + 1], cache.pre[l], layer.act));
      grads[2 * l] = d_pre.transpose() * cache.post[l];
      grads[2 * l + 1] = d_pre.colwise().sum().transpose();
      if (l > 0 || d_input) d = d_pre * layer.weight;
    }
    if (d_input) *d_input = d;
    return grads;
  }

  ParamRefsT<Scalar> params() {
    ParamRefsT<Scalar> refs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::string base = name_ + ".l" + std::to_string(l);
      refs.push_back({base + ".W", &layers_[l].weight});
      refs.push_back({base + ".b", &layers_[l].bias});
    }
    return refs;
  }
  ParamRefsT<Scalar> params() const { return const_cast<MlpT*>(this)->params(); }

  int in_dim() const { return layers_.front().in_dim(); }
  int out_dim() const { return layers_.back().out_dim(); }
  const std::vector<DenseLayerT<Scalar>>& layers() const { return layers_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::vector<DenseLayerT<Scalar>> layers_;
};

using DenseLayer = DenseLayerT<float>;
using MlpCache = MlpCacheT<float>;
using Mlp = MlpT<float>;

}  // namespace sedrl::nn
