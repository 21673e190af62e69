#include <algorithm>
#include <map>
#include <optional>

#include <spdlog/spdlog.h>

#include "tabscm/common.hpp"
#include "tabscm/discovery.hpp"

namespace tabscm {

namespace {

/// Calls fn on every size-k subset of pool (lexicographic); stops early when
/// fn returns true. Returns whether it stopped early.
template <typename Fn>
bool for_each_subset(const std::vector<std::size_t>& pool, std::size_t k, Fn&& fn) {
  if (k > pool.size()) return false;
  std::vector<std::size_t> pick(k);
  for (std::size_t i = 0; i < k; ++i) pick[i] = i;
  std::vector<std::size_t> subset(k);
  for (;;) {
    for (std::size_t i = 0; i < k; ++i) subset[i] = pool[pick[i]];
    if (fn(subset)) return true;
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == pool.size() - k + (i - 1)) --i;
    if (i == 0) return false;
    ++pick[i - 1];
    for (std::size_t m = i; m < k; ++m) pick[m] = pick[m - 1] + 1;
  }
}

}  // namespace

Cpdag pc_discover(const Table& data, const PcConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw Error("PC alpha must lie in (0, 1)");
  const std::size_t d = data.n_cols();
  CiTester tester(data, config.ci_test, config.bins);

  std::vector<std::uint8_t> adj(d * d, 1);
  for (std::size_t i = 0; i < d; ++i) adj[i * d + i] = 0;
  std::map<Edge, std::vector<std::size_t>> sepset;

  for (std::size_t level = 0; level <= config.max_condition_set; ++level) {
    // Adjacency sets are frozen for the whole level so the outcome does not
    // depend on the order in which edges are visited.
    std::vector<std::vector<std::size_t>> frozen(d);
    bool testable = false;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j)
        if (adj[i * d + j]) frozen[i].push_back(j);
      if (frozen[i].size() > level) testable = true;
    }
    if (!testable) break;

    std::vector<Edge> edges;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        if (adj[i * d + j]) edges.emplace_back(i, j);

    std::vector<std::optional<std::vector<std::size_t>>> found(edges.size());
    parallel_for(0, edges.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t e = lo; e < hi; ++e) {
        auto [i, j] = edges[e];
        for (auto [x, y] : {Edge{i, j}, Edge{j, i}}) {
          std::vector<std::size_t> pool;
          for (auto v : frozen[x])
            if (v != y) pool.push_back(v);
          bool stop = for_each_subset(pool, level, [&](const std::vector<std::size_t>& s) {
            if (tester.test(i, j, s, config.alpha).independent) {
              found[e] = s;
              return true;
            }
            return false;
          });
          if (stop) break;
        }
      }
    });
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!found[e]) continue;
      auto [i, j] = edges[e];
      adj[i * d + j] = adj[j * d + i] = 0;
      sepset[edges[e]] = *found[e];
    }
  }

  Cpdag g(data.schema().names());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (adj[i * d + j]) g.add_undirected(i, j);

  // Colliders i -> k <- j for non-adjacent i, j with k outside their sepset.
  std::size_t conflicts = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (adj[i * d + j]) continue;
      auto it = sepset.find({i, j});
      for (std::size_t k = 0; k < d; ++k) {
        if (!adj[i * d + k] || !adj[j * d + k]) continue;
        if (it != sepset.end() && std::find(it->second.begin(), it->second.end(), k) != it->second.end()) continue;
        for (auto p : {i, j}) {
          if (g.has_undirected(p, k)) {
            g.orient(p, k);
          } else if (g.has_directed(k, p)) {
            ++conflicts;
          }
        }
      }
    }
  }
  if (conflicts > 0) spdlog::warn("PC: {} conflicting collider orientations ignored", conflicts);
  return apply_meek_rules(g);
}

}  // namespace tabscm
