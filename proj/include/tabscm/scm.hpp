#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabscm/diffusion.hpp"
#include "tabscm/gbdt.hpp"
#include "tabscm/graph.hpp"
#include "tabscm/mechanisms.hpp"
#include "tabscm/preprocess.hpp"
#include "tabscm/table.hpp"

namespace tabscm {

enum class MechanismKind { Kde, CategoricalMarginal, Diffusion, TreeEnsemble };

std::string_view to_string(MechanismKind kind);

/// Family mandated for a node: roots get marginals, children get diffusion
/// (numerical) or boosted trees (categorical).
MechanismKind mechanism_kind_for(bool is_root, ColumnKind kind);

using Mechanism = std::variant<KdeMechanism, CategoricalMarginal, DiffusionMechanism, GbdtClassifier>;

struct ScmFitConfig {
  DiffusionConfig diffusion;
  GbdtConfig gbdt;
  std::uint64_t seed = 0;
};

/// do(X_j = x_j) for a set of nodes. Values are raw numbers or category names.
class InterventionSpec {
 public:
  using Value = std::variant<double, std::string>;

  InterventionSpec() = default;
  explicit InterventionSpec(std::map<std::string, Value> assignments) : assignments_(std::move(assignments)) {}

  /// Parses "column=value" strings against the schema.
  static InterventionSpec parse(const std::vector<std::string>& items, const TableSchema& schema);

  const std::map<std::string, Value>& assignments() const { return assignments_; }
  bool empty() const { return assignments_.empty(); }

  /// One entry per schema column: the fixed raw value (codes for categorical
  /// columns) or nullopt. Throws SchemaError for unknown nodes or values.
  std::vector<std::optional<double>> resolve(const TableSchema& schema) const;

 private:
  std::map<std::string, Value> assignments_;
};

/// Exogenous draws consumed by one node of one generated row. KDE: index +
/// one Gaussian; categorical marginal and trees: one uniform; diffusion: x_T
/// then z_T, ..., z_2.
struct NodeNoise {
  std::int64_t index = -1;
  std::vector<double> values;

  bool operator==(const NodeNoise&) const = default;
};

struct NoiseTrace {
  std::uint64_t fingerprint = 0;
  std::vector<NodeNoise> nodes;  // schema order

  nlohmann::json to_json() const;
  static NoiseTrace from_json(const nlohmann::json& j);
};

enum class UpsampleMode { Auto, Intervention, Rejection };

std::string_view to_string(UpsampleMode mode);
UpsampleMode parse_upsample_mode(std::string_view text);

struct UpsampleResult {
  Table rows;
  /// "intervention" or "rejection".
  std::string method;
  std::map<std::string, std::size_t> generated;
  double acceptance_rate = 1.0;
};

class ScmModel {
 public:
  ScmModel() = default;

  /// train must be imputed and its columns must match the DAG's nodes.
  static ScmModel fit(const Table& train, const Dag& dag, const ScmFitConfig& config);

  const Dag& dag() const { return dag_; }
  const TableSchema& schema() const { return schema_; }
  const Standardizer& standardizer() const { return standardizer_; }
  const std::vector<std::size_t>& order() const { return dag_.order(); }
  const Mechanism& mechanism(std::size_t node) const { return mechanisms_.at(node); }
  MechanismKind kind(std::size_t node) const;
  const ParentEncoder& encoder(std::size_t node) const { return encoders_.at(node); }
  /// Training category counts per categorical column (empty for numerical).
  const std::vector<std::vector<std::size_t>>& category_counts() const { return category_counts_; }
  const nlohmann::json& diagnostics() const { return diagnostics_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  /// Free-form metadata stored with the model (e.g. the CLI's config hash).
  const nlohmann::json& provenance() const { return provenance_; }
  void set_provenance(nlohmann::json p) { provenance_ = std::move(p); }

  Table sample(std::size_t n, std::uint64_t seed) const;
  Table intervene(const InterventionSpec& spec, std::size_t n, std::uint64_t seed) const;
  std::pair<Table, std::vector<NoiseTrace>> sample_with_trace(std::size_t n, std::uint64_t seed) const;
  /// Replays the trace with the intervened nodes fixed; returns one row.
  Table counterfactual(const NoiseTrace& trace, const InterventionSpec& spec) const;

  /// target_counts are desired totals per category of `label`, relative to
  /// the training counts; only the shortfall is generated.
  UpsampleResult upsample(const std::string& label, const std::map<std::string, std::size_t>& target_counts,
                          std::uint64_t seed, UpsampleMode mode = UpsampleMode::Auto) const;

  nlohmann::json to_json() const;
  static ScmModel from_json(const nlohmann::json& j);
  std::string serialize() const;
  static ScmModel deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static ScmModel load(const std::filesystem::path& path);

 private:
  void finish_setup();
  /// Generates rows [0, n) into a row-major n x d buffer. fixed holds per-column
  /// interventions; traces, when given, receive every node's draws.
  std::vector<double> generate(std::size_t n, std::uint64_t seed, const std::vector<std::optional<double>>& fixed,
                               std::vector<NoiseTrace>* traces) const;
  void draw_node_noise(std::size_t node, Stream& rng, NodeNoise& out) const;
  /// Realizes `rows` rows of one node from encoded parents and noise.
  void realize_node(std::size_t node, const double* parents, const NodeNoise* const* noise, std::size_t rows,
                    double* out) const;
  Table to_table(const std::vector<double>& buffer, std::size_t n) const;

  Dag dag_;
  TableSchema schema_;
  Standardizer standardizer_;
  std::vector<Mechanism> mechanisms_;
  std::vector<ParentEncoder> encoders_;
  std::vector<std::vector<std::size_t>> category_counts_;
  nlohmann::json diagnostics_ = nlohmann::json::object();
  std::uint64_t fingerprint_ = 0;
  nlohmann::json provenance_ = nlohmann::json::object();
};

inline constexpr int kModelFormatVersion = 1;

}  // namespace tabscm
