#include "tabscm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include <spdlog/spdlog.h>

#include "tabscm/common.hpp"

namespace tabscm {

namespace {

std::size_t find_name(const std::vector<std::string>& nodes, std::string_view name) {
  auto it = std::find(nodes.begin(), nodes.end(), name);
  if (it == nodes.end()) throw GraphError("unknown node '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - nodes.begin());
}

void check_unique(const std::vector<std::string>& nodes) {
  std::set<std::string> seen(nodes.begin(), nodes.end());
  if (seen.size() != nodes.size()) throw GraphError("duplicate node names");
}

/// Finds one directed cycle; returns it as a node sequence (first node not
/// repeated) or an empty vector. Starts from the smallest index.
std::vector<std::size_t> find_cycle(std::size_t n, const std::vector<std::vector<std::size_t>>& out) {
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::size_t> stack;
  std::vector<std::size_t> cycle;
  std::function<bool(std::size_t)> dfs = [&](std::size_t v) {
    state[v] = 1;
    stack.push_back(v);
    for (auto w : out[v]) {
      if (state[w] == 1) {
        auto it = std::find(stack.begin(), stack.end(), w);
        cycle.assign(it, stack.end());
        return true;
      }
      if (state[w] == 0 && dfs(w)) return true;
    }
    stack.pop_back();
    state[v] = 2;
    return false;
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (state[v] == 0 && dfs(v)) return cycle;
  }
  return {};
}

std::vector<std::vector<std::size_t>> out_lists(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<std::size_t>> out(n);
  for (auto [u, v] : edges) out[u].push_back(v);
  for (auto& o : out) std::sort(o.begin(), o.end());
  return out;
}

bool reaches(std::size_t n, const std::vector<std::uint8_t>& adj, std::size_t from, std::size_t to) {
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::size_t> todo{from};
  seen[from] = 1;
  while (!todo.empty()) {
    auto v = todo.back();
    todo.pop_back();
    if (v == to) return true;
    for (std::size_t w = 0; w < n; ++w) {
      if (adj[v * n + w] && !seen[w]) {
        seen[w] = 1;
        todo.push_back(w);
      }
    }
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cpdag

Cpdag::Cpdag(std::vector<std::string> nodes)
    : nodes_(std::move(nodes)), dir_(nodes_.size() * nodes_.size(), 0), und_(nodes_.size() * nodes_.size(), 0) {
  check_unique(nodes_);
}

std::size_t Cpdag::index_of(std::string_view name) const { return find_name(nodes_, name); }

void Cpdag::check_pair(std::size_t a, std::size_t b) const {
  if (a >= size() || b >= size()) throw GraphError("node index out of range");
  if (a == b) throw GraphError("self-loops are not allowed");
}

void Cpdag::add_directed(std::size_t from, std::size_t to) {
  check_pair(from, to);
  if (has_undirected(from, to) || has_directed(to, from)) {
    throw GraphError("edge " + nodes_[from] + " -> " + nodes_[to] + " conflicts with an existing edge");
  }
  dir_[from * size() + to] = 1;
}

void Cpdag::add_undirected(std::size_t a, std::size_t b) {
  check_pair(a, b);
  if (has_directed(a, b) || has_directed(b, a)) {
    throw GraphError("edge " + nodes_[a] + " - " + nodes_[b] + " conflicts with an existing edge");
  }
  und_[a * size() + b] = und_[b * size() + a] = 1;
}

void Cpdag::remove_edge(std::size_t a, std::size_t b) {
  check_pair(a, b);
  dir_[a * size() + b] = dir_[b * size() + a] = 0;
  und_[a * size() + b] = und_[b * size() + a] = 0;
}

void Cpdag::orient(std::size_t from, std::size_t to) {
  remove_edge(from, to);
  dir_[from * size() + to] = 1;
}

std::vector<std::size_t> Cpdag::parents(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < size(); ++u)
    if (has_directed(u, v)) out.push_back(u);
  return out;
}

std::vector<std::size_t> Cpdag::children(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < size(); ++u)
    if (has_directed(v, u)) out.push_back(u);
  return out;
}

std::vector<std::size_t> Cpdag::undirected_neighbors(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < size(); ++u)
    if (has_undirected(v, u)) out.push_back(u);
  return out;
}

std::vector<std::size_t> Cpdag::adjacents(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < size(); ++u)
    if (u != v && adjacent(u, v)) out.push_back(u);
  return out;
}

std::vector<Edge> Cpdag::directed_edges() const {
  std::vector<Edge> out;
  for (std::size_t u = 0; u < size(); ++u)
    for (std::size_t v = 0; v < size(); ++v)
      if (has_directed(u, v)) out.emplace_back(u, v);
  return out;
}

std::vector<Edge> Cpdag::undirected_edges() const {
  std::vector<Edge> out;
  for (std::size_t u = 0; u < size(); ++u)
    for (std::size_t v = u + 1; v < size(); ++v)
      if (has_undirected(u, v)) out.emplace_back(u, v);
  return out;
}

// ---------------------------------------------------------------------------
// Dag

std::vector<std::size_t> topological_sort(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::size_t> indegree(n, 0);
  auto out = out_lists(n, edges);
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw GraphError("edge endpoint out of range");
    ++indegree[v];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push(v);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto w : out[v])
      if (--indegree[w] == 0) ready.push(w);
  }
  if (order.size() != n) {
    auto cycle = find_cycle(n, out);
    std::string witness;
    for (auto v : cycle) witness += std::to_string(v) + " -> ";
    if (!cycle.empty()) witness += std::to_string(cycle.front());
    throw GraphError("cycle detected: " + witness);
  }
  return order;
}

Dag::Dag(std::vector<std::string> nodes, const std::vector<Edge>& edges)
    : nodes_(std::move(nodes)), adj_(nodes_.size() * nodes_.size(), 0) {
  check_unique(nodes_);
  const std::size_t n = nodes_.size();
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw GraphError("edge endpoint out of range");
    if (u == v) throw GraphError("self-loop on '" + nodes_[u] + "'");
    adj_[u * n + v] = 1;
  }
  try {
    order_ = topological_sort(n, this->edges());
  } catch (const GraphError&) {
    auto cycle = find_cycle(n, out_lists(n, this->edges()));
    std::string witness;
    for (auto v : cycle) witness += nodes_[v] + " -> ";
    if (!cycle.empty()) witness += nodes_[cycle.front()];
    throw GraphError("graph is cyclic: " + witness);
  }
}

std::size_t Dag::index_of(std::string_view name) const { return find_name(nodes_, name); }

std::vector<std::size_t> Dag::parents(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < size(); ++u)
    if (has_edge(u, v)) out.push_back(u);
  return out;
}

std::vector<std::size_t> Dag::children(std::size_t v) const {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < size(); ++u)
    if (has_edge(v, u)) out.push_back(u);
  return out;
}

std::vector<Edge> Dag::edges() const {
  std::vector<Edge> out;
  for (std::size_t u = 0; u < size(); ++u)
    for (std::size_t v = 0; v < size(); ++v)
      if (has_edge(u, v)) out.emplace_back(u, v);
  return out;
}

std::size_t Dag::edge_count() const {
  return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> Dag::descendants(std::size_t v) const {
  std::vector<std::uint8_t> seen(size(), 0);
  std::vector<std::size_t> todo{v};
  while (!todo.empty()) {
    auto u = todo.back();
    todo.pop_back();
    for (auto w : children(u)) {
      if (!seen[w]) {
        seen[w] = 1;
        todo.push_back(w);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < size(); ++u)
    if (seen[u] && u != v) out.push_back(u);
  return out;
}

Cpdag Dag::as_cpdag() const {
  Cpdag g(nodes_);
  for (auto [u, v] : edges()) g.add_directed(u, v);
  return g;
}

std::vector<std::size_t> topological_sort(const Dag& dag) { return dag.order(); }

// ---------------------------------------------------------------------------
// Structure queries and orientation

std::set<VStructure> find_v_structures(const Cpdag& g) {
  std::set<VStructure> out;
  for (std::size_t c = 0; c < g.size(); ++c) {
    auto pa = g.parents(c);
    for (std::size_t x = 0; x < pa.size(); ++x)
      for (std::size_t y = x + 1; y < pa.size(); ++y)
        if (!g.adjacent(pa[x], pa[y])) out.insert({pa[x], pa[y], c});
  }
  return out;
}

std::set<VStructure> find_v_structures(const Dag& g) { return find_v_structures(g.as_cpdag()); }

Cpdag apply_meek_rules(const Cpdag& input) {
  Cpdag g = input;
  const std::size_t n = g.size();
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b || !g.has_undirected(a, b)) continue;
        bool orient = false;
        // R1: c -> a - b, c and b non-adjacent.
        for (std::size_t c = 0; c < n && !orient; ++c) {
          orient = g.has_directed(c, a) && c != b && !g.adjacent(c, b);
        }
        // R2: a -> c -> b with a - b.
        for (std::size_t c = 0; c < n && !orient; ++c) {
          orient = g.has_directed(a, c) && g.has_directed(c, b);
        }
        // R3: a - c -> b, a - d -> b, c and d non-adjacent.
        for (std::size_t c = 0; c < n && !orient; ++c) {
          if (!(g.has_undirected(a, c) && g.has_directed(c, b))) continue;
          for (std::size_t d = c + 1; d < n && !orient; ++d) {
            orient = g.has_undirected(a, d) && g.has_directed(d, b) && !g.adjacent(c, d);
          }
        }
        // R4: a adj c, c -> d -> b, a adj d, c and b non-adjacent.
        for (std::size_t c = 0; c < n && !orient; ++c) {
          if (c == b || !g.adjacent(a, c) || g.adjacent(c, b)) continue;
          for (std::size_t d = 0; d < n && !orient; ++d) {
            orient = d != a && g.has_directed(c, d) && g.has_directed(d, b) && g.adjacent(a, d);
          }
        }
        if (orient) {
          g.orient(a, b);
          changed = true;
        }
      }
    }
  }
  return g;
}

Cpdag dag_to_cpdag(const Dag& dag) {
  Cpdag g(dag.nodes());
  for (auto [u, v] : dag.edges()) g.add_undirected(u, v);
  for (const auto& vs : find_v_structures(dag)) {
    g.orient(vs.parent_a, vs.child);
    g.orient(vs.parent_b, vs.child);
  }
  return apply_meek_rules(g);
}

Dag consistent_extension(const Cpdag& input) {
  const std::size_t n = input.size();
  Cpdag g = input;
  std::vector<std::uint8_t> alive(n, 1);
  std::vector<Edge> edges = input.directed_edges();
  for (std::size_t remaining = n; remaining > 0; --remaining) {
    std::size_t sink = n;
    for (std::size_t x = n; x-- > 0;) {
      if (!alive[x]) continue;
      bool eligible = true;
      for (std::size_t y = 0; y < n && eligible; ++y) eligible = !(alive[y] && g.has_directed(x, y));
      if (!eligible) continue;
      std::vector<std::size_t> adj;
      for (std::size_t y = 0; y < n; ++y)
        if (alive[y] && y != x && g.adjacent(x, y)) adj.push_back(y);
      for (auto y : adj) {
        if (!g.has_undirected(x, y)) continue;
        for (auto z : adj) {
          if (z != y && !g.adjacent(y, z)) {
            eligible = false;
            break;
          }
        }
        if (!eligible) break;
      }
      if (eligible) {
        sink = x;
        break;
      }
    }
    if (sink == n) throw GraphError("no consistent extension");
    for (std::size_t y = 0; y < n; ++y) {
      if (alive[y] && g.has_undirected(sink, y)) edges.emplace_back(y, sink);
    }
    alive[sink] = 0;
  }
  return Dag(input.nodes(), edges);
}

Dag orient_to_dag(const Cpdag& g, bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  try {
    return consistent_extension(g);
  } catch (const GraphError&) {
    spdlog::warn("CPDAG admits no consistent extension; orienting greedily");
  }
  if (used_fallback) *used_fallback = true;
  const std::size_t n = g.size();
  std::vector<std::uint8_t> adj(n * n, 0);
  for (auto [u, v] : g.directed_edges()) {
    if (reaches(n, adj, v, u)) {
      adj[v * n + u] = 1;
    } else {
      adj[u * n + v] = 1;
    }
  }
  std::vector<Edge> directed;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (adj[u * n + v]) directed.emplace_back(u, v);
  auto order = topological_sort(n, directed);
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[order[i]] = i;
  for (auto [a, b] : g.undirected_edges()) {
    if (pos[a] < pos[b]) {
      directed.emplace_back(a, b);
    } else {
      directed.emplace_back(b, a);
    }
  }
  return Dag(g.nodes(), directed);
}

// ---------------------------------------------------------------------------
// Weighted adjacency

WeightedAdjacency::WeightedAdjacency(Eigen::MatrixXd w) : w_(std::move(w)) {
  if (w_.rows() != w_.cols()) throw GraphError("weighted adjacency must be square");
  for (Eigen::Index i = 0; i < w_.rows(); ++i) {
    if (w_(i, i) != 0.0) throw GraphError("weighted adjacency must have a zero diagonal");
  }
}

WeightedAdjacency WeightedAdjacency::zeros(std::size_t d) {
  const auto k = static_cast<Eigen::Index>(d);
  return WeightedAdjacency(Eigen::MatrixXd::Zero(k, k));
}

Dag threshold_to_dag(const WeightedAdjacency& w, double w_min, std::vector<std::string> names) {
  const std::size_t n = w.size();
  if (names.size() != n) throw GraphError("name count does not match adjacency size");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && std::abs(w(i, j)) >= w_min && w(i, j) != 0.0) edges.emplace_back(i, j);
  for (;;) {
    auto cycle = find_cycle(n, out_lists(n, edges));
    if (cycle.empty()) break;
    std::size_t weakest = 0;
    double weakest_w = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      auto u = cycle[k];
      auto v = cycle[(k + 1) % cycle.size()];
      if (std::abs(w(u, v)) < weakest_w) {
        weakest_w = std::abs(w(u, v));
        weakest = k;
      }
    }
    Edge drop{cycle[weakest], cycle[(weakest + 1) % cycle.size()]};
    edges.erase(std::find(edges.begin(), edges.end(), drop));
  }
  return Dag(std::move(names), edges);
}

// ---------------------------------------------------------------------------
// Distances

std::size_t shd(const Dag& a, const Dag& b) {
  if (a.nodes() != b.nodes()) throw GraphError("shd requires identical node sets");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const int ea = a.has_edge(i, j) ? 1 : (a.has_edge(j, i) ? -1 : 0);
      const int eb = b.has_edge(i, j) ? 1 : (b.has_edge(j, i) ? -1 : 0);
      if (ea != eb) ++d;
    }
  }
  return d;
}

std::size_t skeleton_distance(const Cpdag& a, const Cpdag& b) {
  if (a.nodes() != b.nodes()) throw GraphError("skeleton distance requires identical node sets");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if (a.adjacent(i, j) != b.adjacent(i, j)) ++d;
  return d;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json graph_to_json(const Cpdag& g) {
  nlohmann::json directed = nlohmann::json::array();
  nlohmann::json undirected = nlohmann::json::array();
  for (auto [u, v] : g.directed_edges()) directed.push_back({g.nodes()[u], g.nodes()[v]});
  for (auto [u, v] : g.undirected_edges()) undirected.push_back({g.nodes()[u], g.nodes()[v]});
  return {{"nodes", g.nodes()}, {"directed", directed}, {"undirected", undirected}};
}

nlohmann::json graph_to_json(const Dag& g) { return graph_to_json(g.as_cpdag()); }

Cpdag cpdag_from_json(const nlohmann::json& j) {
  try {
    Cpdag g(j.at("nodes").get<std::vector<std::string>>());
    for (const auto& e : j.value("directed", nlohmann::json::array())) {
      g.add_directed(g.index_of(e.at(0).get<std::string>()), g.index_of(e.at(1).get<std::string>()));
    }
    for (const auto& e : j.value("undirected", nlohmann::json::array())) {
      g.add_undirected(g.index_of(e.at(0).get<std::string>()), g.index_of(e.at(1).get<std::string>()));
    }
    topological_sort(g.size(), g.directed_edges());
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid graph JSON: ") + e.what());
  }
}

Dag dag_from_json(const nlohmann::json& j) {
  Cpdag g = cpdag_from_json(j);
  if (!g.undirected_edges().empty()) throw GraphError("graph has undirected edges; expected a DAG");
  return Dag(g.nodes(), g.directed_edges());
}

}  // namespace tabscm
