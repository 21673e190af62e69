#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace tabscm {

using Edge = std::pair<std::size_t, std::size_t>;

/// Mixed graph of directed and undirected edges over named nodes.
class Cpdag {
 public:
  Cpdag() = default;
  explicit Cpdag(std::vector<std::string> nodes);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  std::size_t index_of(std::string_view name) const;

  void add_directed(std::size_t from, std::size_t to);
  void add_undirected(std::size_t a, std::size_t b);
  void remove_edge(std::size_t a, std::size_t b);
  /// Replaces any edge between the pair with from -> to.
  void orient(std::size_t from, std::size_t to);

  bool has_directed(std::size_t from, std::size_t to) const { return dir_[from * size() + to] != 0; }
  bool has_undirected(std::size_t a, std::size_t b) const { return und_[a * size() + b] != 0; }
  bool adjacent(std::size_t a, std::size_t b) const {
    return has_directed(a, b) || has_directed(b, a) || has_undirected(a, b);
  }

  std::vector<std::size_t> parents(std::size_t v) const;
  std::vector<std::size_t> children(std::size_t v) const;
  std::vector<std::size_t> undirected_neighbors(std::size_t v) const;
  std::vector<std::size_t> adjacents(std::size_t v) const;

  std::vector<Edge> directed_edges() const;
  /// Each undirected edge once, as (low, high).
  std::vector<Edge> undirected_edges() const;

  bool operator==(const Cpdag&) const = default;

 private:
  void check_pair(std::size_t a, std::size_t b) const;

  std::vector<std::string> nodes_;
  std::vector<std::uint8_t> dir_;
  std::vector<std::uint8_t> und_;
};

/// Directed acyclic graph with a cached topological order.
class Dag {
 public:
  Dag() = default;
  /// Throws GraphError (with a cycle witness) if the edges contain a cycle.
  Dag(std::vector<std::string> nodes, const std::vector<Edge>& edges);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  std::size_t index_of(std::string_view name) const;

  bool has_edge(std::size_t from, std::size_t to) const { return adj_[from * size() + to] != 0; }
  std::vector<std::size_t> parents(std::size_t v) const;
  std::vector<std::size_t> children(std::size_t v) const;
  std::vector<Edge> edges() const;
  std::size_t edge_count() const;
  bool is_root(std::size_t v) const { return parents(v).empty(); }
  /// Nodes reachable from v by directed paths, excluding v.
  std::vector<std::size_t> descendants(std::size_t v) const;

  const std::vector<std::size_t>& order() const { return order_; }

  Cpdag as_cpdag() const;

  bool operator==(const Dag& other) const { return nodes_ == other.nodes_ && adj_ == other.adj_; }

 private:
  std::vector<std::string> nodes_;
  std::vector<std::uint8_t> adj_;
  std::vector<std::size_t> order_;
};

/// Kahn's algorithm, smallest node index first among ready nodes. Throws
/// GraphError naming one cycle when the edge set is cyclic.
std::vector<std::size_t> topological_sort(std::size_t n, const std::vector<Edge>& edges);
std::vector<std::size_t> topological_sort(const Dag& dag);

struct VStructure {
  std::size_t parent_a;  // always < parent_b
  std::size_t parent_b;
  std::size_t child;
  auto operator<=>(const VStructure&) const = default;
};

/// All a -> c <- b with a, b non-adjacent.
std::set<VStructure> find_v_structures(const Cpdag& g);
std::set<VStructure> find_v_structures(const Dag& g);

/// Meek rules R1-R4 applied to a fixpoint.
Cpdag apply_meek_rules(const Cpdag& g);

/// Skeleton plus v-structures of `dag`, completed with the Meek rules.
Cpdag dag_to_cpdag(const Dag& dag);

/// Dor-Tarsi extension. Among eligible sinks the highest node index is
/// removed first. Throws GraphError("no consistent extension").
Dag consistent_extension(const Cpdag& g);

/// consistent_extension(), falling back to greedy acyclic orientation (with
/// a logged warning) when the CPDAG admits no extension.
Dag orient_to_dag(const Cpdag& g, bool* used_fallback = nullptr);

/// d x d real matrix with an exactly zero diagonal.
class WeightedAdjacency {
 public:
  WeightedAdjacency() = default;
  /// Throws GraphError if the matrix is not square or has a nonzero diagonal.
  explicit WeightedAdjacency(Eigen::MatrixXd w);
  static WeightedAdjacency zeros(std::size_t d);

  const Eigen::MatrixXd& matrix() const { return w_; }
  std::size_t size() const { return static_cast<std::size_t>(w_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return w_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Eigen::MatrixXd w_;
};

/// Edge i -> j iff |W_ij| >= w_min; cycles are broken by repeatedly dropping
/// the weakest edge on a detected cycle.
Dag threshold_to_dag(const WeightedAdjacency& w, double w_min, std::vector<std::string> names);

/// Insertions + deletions + reversals turning a into b.
std::size_t shd(const Dag& a, const Dag& b);
/// Number of node pairs whose adjacency differs, ignoring orientation.
std::size_t skeleton_distance(const Cpdag& a, const Cpdag& b);

nlohmann::json graph_to_json(const Cpdag& g);
nlohmann::json graph_to_json(const Dag& g);
Cpdag cpdag_from_json(const nlohmann::json& j);
/// Throws GraphError if the JSON carries undirected edges.
Dag dag_from_json(const nlohmann::json& j);

}  // namespace tabscm
