#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tabscm/gbdt.hpp"
#include "tabscm/rules.hpp"
#include "tabscm/table.hpp"

namespace tabscm {

/// Exact two-sample KS statistic, sup |F_a - F_b| over the pooled sample.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Half L1 distance; the shorter vector is padded with zeros.
double tv_distance(std::span<const double> p, std::span<const double> q);

/// Relative frequency of each code in [0, n_categories).
std::vector<double> category_frequencies(std::span<const std::int32_t> codes, std::size_t n_categories);

struct DensityError {
  double e_den = 0.0;
  /// KS for numerical columns, TV for categorical ones.
  std::map<std::string, double> per_column;
};

DensityError density_error(const Table& real, const Table& syn);

/// Pearson correlation; 0 when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Bin edges splitting `reference` into equal-frequency bins; bin_of() maps
/// any value through them.
std::vector<double> equal_frequency_edges(std::span<const double> reference, std::size_t bins);
std::int32_t bin_of(const std::vector<double>& edges, double x);

struct CorrError {
  double e_corr = 0.0;
  std::optional<double> e_num;
  std::optional<double> e_cat;
  std::size_t numeric_pairs = 0;
  std::size_t categorical_pairs = 0;
};

/// Numeric pairs: mean |rho_real - rho_syn|. Categorical and mixed pairs
/// (numerical side binned by the real column's quantiles): mean TV between
/// joint contingency tables. e_corr averages whichever components exist.
CorrError corr_error(const Table& real, const Table& syn, std::size_t bins = 5);

struct DcrResult {
  std::vector<double> distances;
  double median = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

/// Per synthetic row, L1 distance to the nearest real row: numerics
/// standardized by the real data, 0/1 per categorical mismatch.
DcrResult dcr(const Table& real, const Table& syn);

/// Mann-Whitney AUC of `scores` for labels (1 = positive, 0 = negative).
double auc(std::span<const double> scores, std::span<const std::int32_t> labels);

/// Features for the classifiers: numerics standardized by `reference`,
/// categoricals one-hot. Columns listed in `exclude` are dropped.
Eigen::MatrixXd encode_features(const Table& table, const Table& reference, const std::vector<std::size_t>& exclude = {});

struct C2stConfig {
  std::size_t n_splits = 5;
  std::uint64_t seed = 0;
  GbdtConfig gbdt;
};

struct C2stResult {
  double score = 0.0;
  double mean_auc = 0.0;
  std::vector<double> aucs;
};

/// 1 - (2 AUC - 1) of a real-vs-synthetic classifier, clipped to [0, 1].
C2stResult c2st(const Table& real, const Table& syn, const C2stConfig& config = {});

enum class TaskKind { Classification, Regression };

std::string_view to_string(TaskKind task);
TaskKind parse_task(std::string_view text);

struct UtilityResult {
  /// "auc" or "rmse".
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> values;
};

struct UtilityConfig {
  std::size_t n_repeats = 5;
  std::uint64_t seed = 0;
  GbdtConfig gbdt;
};

/// Train on syn_train, score on real_test. Classification reports macro
/// one-vs-rest AUC; regression reports RMSE of the target standardized by
/// the training target's statistics.
UtilityResult utility_eval(const Table& syn_train, const Table& real_test, const std::string& target, TaskKind task,
                           const UtilityConfig& config = {});

struct AlphaBeta {
  double alpha_precision = 0.0;
  double beta_recall = 0.0;
  std::vector<double> levels;
  std::vector<double> precision_curve;
  std::vector<double> recall_curve;
};

/// precision: P(a) = share of synthetic rows inside the ball around the real
/// centroid holding ceil(a n) real rows; score 1 - 2 mean |P(a) - a|.
/// recall: R(b) = share of the ceil(b n) most central real rows whose
/// k-nearest-real-neighbour ball contains a synthetic row; score mean R(b).
AlphaBeta alpha_precision_beta_recall(const Table& real, const Table& syn, std::size_t grid = 20, std::size_t k = 5);

struct FnrFpr {
  std::optional<double> fnr;
  std::optional<double> fpr;
};

FnrFpr fnr_fpr(std::span<const std::int32_t> predictions, std::span<const std::int32_t> truth, std::int32_t positive);

struct MetricsReport {
  DensityError density;
  CorrError corr;
  DcrResult dcr;
  std::optional<C2stResult> c2st;
  std::optional<UtilityResult> utility;
  std::optional<AlphaBeta> alpha_beta;
  std::map<std::string, double> violation_rates;
  std::optional<FnrFpr> fnr_fpr;
  std::string positive_class;

  nlohmann::json to_json() const;
};

struct EvaluationConfig {
  std::size_t bins = 5;
  bool run_c2st = true;
  C2stConfig c2st;
  bool run_alpha_beta = true;
  std::size_t grid = 20;
  /// Utility and FNR/FPR need a target column.
  std::optional<std::string> target;
  std::optional<TaskKind> task;
  UtilityConfig utility;
  /// Positive class for FNR/FPR; defaults to the rarest class in `real`.
  std::optional<std::string> positive;
  std::vector<Rule> rules;
};

/// Rules are not part of the JSON form; the CLI loads them from a file.
nlohmann::json evaluation_config_to_json(const EvaluationConfig& c);
EvaluationConfig evaluation_config_from_json(const nlohmann::json& j, EvaluationConfig defaults = {});

/// real is the held-out reference; syn is the synthetic table. Rules are
/// evaluated on syn.
MetricsReport evaluate(const Table& real, const Table& syn, const EvaluationConfig& config);

}  // namespace tabscm
