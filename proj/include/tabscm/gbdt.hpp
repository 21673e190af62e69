#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tabscm/common.hpp"

namespace tabscm {

struct GbdtConfig {
  std::size_t n_trees = 100;
  std::size_t depth = 4;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 5;
  double lambda = 1.0;
  /// Row subsampling fraction per round (1 = no subsampling).
  double subsample = 1.0;
  std::uint64_t seed = 0;
};

nlohmann::json gbdt_config_to_json(const GbdtConfig& c);
GbdtConfig gbdt_config_from_json(const nlohmann::json& j, GbdtConfig defaults = {});

/// Regression tree stored as flat arrays. Rows go left when x[feature] < threshold.
struct RegressionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict(const double* row) const;
};

/// Second-order exact greedy tree fit on per-row gradients and hessians.
/// x is n x f; rows lists the training rows (may repeat none).
RegressionTree fit_tree(const Eigen::MatrixXd& x, const std::vector<std::vector<std::uint32_t>>& sorted_by_feature,
                        std::span<const double> grad, std::span<const double> hess,
                        const std::vector<std::uint8_t>& in_sample, const GbdtConfig& config);

/// Per-feature row orders sorted by value (stable).
std::vector<std::vector<std::uint32_t>> presort_features(const Eigen::MatrixXd& x);

/// Softmax gradient boosting. Classes that never occur in training get zero
/// probability; a single observed class gives a constant model.
class GbdtClassifier {
 public:
  GbdtClassifier() = default;

  static GbdtClassifier fit(const Eigen::MatrixXd& x, std::span<const std::int32_t> labels, std::size_t n_classes,
                            const GbdtConfig& config);

  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_features() const { return n_features_; }
  const std::vector<std::int32_t>& observed_classes() const { return classes_; }
  double train_log_loss() const { return train_log_loss_; }

  /// Probabilities over all n_classes() codes.
  void predict_proba(const double* row, double* out) const;
  std::vector<double> predict_proba(const double* row) const;
  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;

  nlohmann::json to_json() const;
  static GbdtClassifier from_json(const nlohmann::json& j);

 private:
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  double learning_rate_ = 0.1;
  std::vector<std::int32_t> classes_;
  std::vector<double> base_;
  // rounds_[round][k] is the tree for observed class k.
  std::vector<std::vector<RegressionTree>> rounds_;
  double train_log_loss_ = 0.0;
};

/// Squared-loss gradient boosting.
class GbdtRegressor {
 public:
  static GbdtRegressor fit(const Eigen::MatrixXd& x, std::span<const double> y, const GbdtConfig& config);
  double predict(const double* row) const;
  std::vector<double> predict(const Eigen::MatrixXd& x) const;

 private:
  double base_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
};

}  // namespace tabscm
