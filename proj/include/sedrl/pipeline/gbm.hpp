#pragma once

#include <vector>

#include <Eigen/Dense>

namespace sedrl::pipeline {

struct GbmConfig {
  int trees = 100;
  int depth = 3;
  double shrinkage = 0.1;
  int min_leaf = 20;
};

// One node of a depth-limited regression tree, stored flat. Leaves have
// feature = -1 and carry the prediction in `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(const Eigen::RowVectorXd& row) const;
};

// Least-squares gradient boosting: prediction = constant + shrinkage * sum
// of tree outputs; each tree is fit to the residuals of its predecessors.
struct GbmModel {
  double initial = 0.0;
  double shrinkage = 0.1;
  int n_features = 0;
  std::vector<Tree> trees;
};

GbmModel gbm_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                 const GbmConfig& config = {});
Eigen::VectorXd gbm_predict(const GbmModel& model, const Eigen::MatrixXd& features);

}  // namespace sedrl::pipeline
