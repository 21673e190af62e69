#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tabscm/graph.hpp"
#include "tabscm/table.hpp"

namespace tabscm {

// ---------------------------------------------------------------------------
// Conditional independence tests

enum class CiTestKind { FisherZ, ChiSquare };

std::string_view to_string(CiTestKind kind);
CiTestKind parse_ci_test(std::string_view text);

struct CiResult {
  bool independent = false;
  double p_value = 0.0;
  double statistic = 0.0;
};

/// Precomputed statistics for repeated CI queries against one table: the
/// correlation matrix of the encoded columns and a discretized copy for the
/// chi-square test (numerics in `bins` equal-frequency bins).
class CiTester {
 public:
  CiTester(const Table& data, CiTestKind configured, std::size_t bins = 5);

  std::size_t n_rows() const { return n_; }
  std::size_t n_cols() const { return kinds_.size(); }

  /// Chi-square whenever i, j or any member of S is categorical, otherwise
  /// the configured test.
  CiResult test(std::size_t i, std::size_t j, const std::vector<std::size_t>& s, double alpha) const;
  CiResult fisher_z(std::size_t i, std::size_t j, const std::vector<std::size_t>& s, double alpha) const;
  CiResult chi_square(std::size_t i, std::size_t j, const std::vector<std::size_t>& s, double alpha) const;

  const Eigen::MatrixXd& correlation() const { return corr_; }

 private:
  std::size_t n_ = 0;
  CiTestKind configured_;
  std::vector<ColumnKind> kinds_;
  Eigen::MatrixXd corr_;
  std::vector<std::vector<std::int32_t>> levels_;
  std::vector<std::int32_t> n_levels_;
};

CiResult fisher_z_test(const Table& data, std::size_t i, std::size_t j, const std::vector<std::size_t>& s,
                       double alpha);
CiResult chi_square_test(const Table& data, std::size_t i, std::size_t j, const std::vector<std::size_t>& s,
                         double alpha, std::size_t bins = 5);

/// Equal-frequency bin index (0..bins-1) of every value.
std::vector<std::int32_t> equal_frequency_bins(std::span<const double> values, std::size_t bins);

// ---------------------------------------------------------------------------
// PC

struct PcConfig {
  double alpha = 0.05;
  CiTestKind ci_test = CiTestKind::FisherZ;
  std::size_t max_condition_set = 3;
  std::size_t bins = 5;
};

Cpdag pc_discover(const Table& data, const PcConfig& config);

// ---------------------------------------------------------------------------
// GES

struct GesConfig {
  double penalty = 1.0;
  std::size_t max_parents = 5;
};

struct GesResult {
  Dag dag;
  Cpdag cpdag;
  /// Total score after each accepted move of the forward phase.
  std::vector<double> forward_scores;
  double final_score = 0.0;
};

GesResult ges_search(const Table& data, const GesConfig& config);
Cpdag ges_discover(const Table& data, const GesConfig& config);

// ---------------------------------------------------------------------------
// NOTEARS

struct NotearsConfig {
  double lambda1 = 0.01;
  double w_min = 0.01;
  std::size_t max_outer_iterations = 20;
  std::size_t inner_iterations = 300;
  double rho_init = 1.0;
  double rho_max = 1e16;
  double h_tolerance = 1e-8;
  double learning_rate = 1e-2;
  /// Scale columns to unit variance after centering.
  bool standardize = true;
};

struct AcyclicityValue {
  double value = 0.0;
  Eigen::MatrixXd gradient;
};

/// exp(A) by scaling and squaring of a truncated Taylor series.
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a, int terms = 24);

/// h(W) = tr(exp(W∘W)) - d and its gradient exp(W∘W)^T ∘ 2W.
AcyclicityValue acyclicity_h(const Eigen::MatrixXd& w);

struct NotearsResult {
  WeightedAdjacency weights;
  Dag dag;
  double h = 0.0;
  double rho = 0.0;
  std::size_t outer_iterations = 0;
  /// Objective after every accepted inner step of the last inner loop.
  std::vector<double> last_inner_objectives;
};

/// Columns are encoded (categoricals as codes) and standardized internally.
NotearsResult notears_discover(const Table& data, const NotearsConfig& config);
/// Same optimizer on an already prepared n x d matrix.
NotearsResult notears_fit(const Eigen::MatrixXd& x, const NotearsConfig& config, std::vector<std::string> names);

// ---------------------------------------------------------------------------
// Dispatch

enum class DiscoveryAlgorithm { Pc, Ges, Notears };

std::string_view to_string(DiscoveryAlgorithm algo);
DiscoveryAlgorithm parse_discovery_algorithm(std::string_view text);

struct DiscoveryConfig {
  DiscoveryAlgorithm algorithm = DiscoveryAlgorithm::Notears;
  PcConfig pc;
  GesConfig ges;
  NotearsConfig notears;
};

struct DiscoveryResult {
  Cpdag cpdag;
  Dag dag;
  std::optional<WeightedAdjacency> weights;
  bool used_fallback_orientation = false;
};

DiscoveryResult discover(const Table& data, const DiscoveryConfig& config);

nlohmann::json discovery_config_to_json(const DiscoveryConfig& config);
/// Missing keys keep their defaults. Throws ParseError on invalid values.
DiscoveryConfig discovery_config_from_json(const nlohmann::json& j);

}  // namespace tabscm
