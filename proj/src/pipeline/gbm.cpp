#include "sedrl/pipeline/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sedrl::pipeline {

double Tree::predict(const Eigen::RowVectorXd& row) const {
  int i = 0;
  while (nodes[i].feature >= 0)
    i = row(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

namespace {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

}  // namespace

GbmModel gbm_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                 const GbmConfig& config) {
  GbmConfig cfg = config;
  cfg.min_leaf = std::max(1, cfg.min_leaf);
  const auto n = static_cast<int>(features.rows());
  const auto d = static_cast<int>(features.cols());
  if (n != targets.size()) throw std::invalid_argument("gbm_fit: row count mismatch");
  if (n < cfg.min_leaf) throw std::invalid_argument("gbm_fit: fewer rows than min_leaf");
  if (!features.allFinite() || !targets.allFinite())
    throw std::invalid_argument("gbm_fit: non-finite input");

  GbmModel model;
  model.initial = targets.mean();
  model.shrinkage = cfg.shrinkage;
  model.n_features = d;

  Eigen::VectorXd residual = targets.array() - model.initial;
  if (residual.cwiseAbs().maxCoeff() < 1e-12) return model;  // constant target

  // Feature orders are shared by every tree.
  std::vector<std::vector<int>> order(d, std::vector<int>(n));
  for (int f = 0; f < d; ++f) {
    std::iota(order[f].begin(), order[f].end(), 0);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](int a, int b) { return features(a, f) < features(b, f); });
  }

  std::vector<int> node_of(n);
  for (int k = 0; k < cfg.trees; ++k) {
    Tree tree;
    tree.nodes.push_back({});
    std::fill(node_of.begin(), node_of.end(), 0);
    std::vector<int> level = {0};

    for (int depth = 0; depth < cfg.depth && !level.empty(); ++depth) {
      const int n_nodes = static_cast<int>(tree.nodes.size());
      std::vector<double> node_sum(n_nodes, 0.0);
      std::vector<int> node_cnt(n_nodes, 0);
      for (int i = 0; i < n; ++i) {
        node_sum[node_of[i]] += residual(i);
        ++node_cnt[node_of[i]];
      }
      std::vector<SplitChoice> best(n_nodes);

      // One pass per feature over the presorted order, carrying running
      // left-side statistics for every node in this level simultaneously.
      std::vector<double> run_sum(n_nodes), prev_val(n_nodes);
      std::vector<int> run_cnt(n_nodes);
      for (int f = 0; f < d; ++f) {
        std::fill(run_sum.begin(), run_sum.end(), 0.0);
        std::fill(run_cnt.begin(), run_cnt.end(), 0);
        for (int i : order[f]) {
          const int nd = node_of[i];
          const double v = features(i, f);
          if (run_cnt[nd] >= cfg.min_leaf && node_cnt[nd] - run_cnt[nd] >= cfg.min_leaf &&
              v > prev_val[nd]) {
            const double sl = run_sum[nd], sr = node_sum[nd] - sl;
            const int cl = run_cnt[nd], cr = node_cnt[nd] - cl;
            const double gain = sl * sl / cl + sr * sr / cr -
                                node_sum[nd] * node_sum[nd] / node_cnt[nd];
            if (gain > best[nd].gain + 1e-12) {
              best[nd] = {true, f, 0.5 * (prev_val[nd] + v), gain};
            }
          }
          run_sum[nd] += residual(i);
          ++run_cnt[nd];
          prev_val[nd] = v;
        }
      }

      std::vector<int> next_level;
      for (int nd : level) {
        if (!best[nd].found) continue;
        tree.nodes[nd].feature = best[nd].feature;
        tree.nodes[nd].threshold = best[nd].threshold;
        tree.nodes[nd].left = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[nd].right = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        next_level.push_back(tree.nodes[nd].left);
        next_level.push_back(tree.nodes[nd].right);
      }
      if (next_level.empty()) break;
      for (int i = 0; i < n; ++i) {
        const auto& parent = tree.nodes[node_of[i]];
        if (parent.feature >= 0)
          node_of[i] = features(i, parent.feature) <= parent.threshold ? parent.left
                                                                       : parent.right;
      }
      level = std::move(next_level);
    }

    // Leaf values are mean residuals over their rows.
    std::vector<double> leaf_sum(tree.nodes.size(), 0.0);
    std::vector<int> leaf_cnt(tree.nodes.size(), 0);
    for (int i = 0; i < n; ++i) {
      leaf_sum[node_of[i]] += residual(i);
      ++leaf_cnt[node_of[i]];
    }
    for (std::size_t j = 0; j < tree.nodes.size(); ++j)
      if (tree.nodes[j].feature < 0 && leaf_cnt[j] > 0)
        tree.nodes[j].value = leaf_sum[j] / leaf_cnt[j];

    if (tree.nodes.size() == 1 && std::abs(tree.nodes[0].value) < 1e-15) break;
    for (int i = 0; i < n; ++i)
      residual(i) -= cfg.shrinkage * tree.nodes[node_of[i]].value;
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Eigen::VectorXd gbm_predict(const GbmModel& model, const Eigen::MatrixXd& features) {
  if (static_cast<int>(features.cols()) != model.n_features)
    throw std::invalid_argument("gbm_predict: feature count mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Constant(features.rows(), model.initial);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::RowVectorXd row = features.row(i);
    double acc = 0.0;
    for (const auto& tree : model.trees) acc += tree.predict(row);
    out(i) += model.shrinkage * acc;
  }
  return out;
}

}  // namespace sedrl::pipeline
