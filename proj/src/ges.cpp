#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>

#include "tabscm/common.hpp"
#include "tabscm/discovery.hpp"

namespace tabscm {

namespace {

class GaussianBic {
 public:
  GaussianBic(const Table& data, double penalty) : n_(static_cast<double>(data.n_rows())), penalty_(penalty) {
    const auto rows = static_cast<Eigen::Index>(data.n_rows());
    const auto d = static_cast<Eigen::Index>(data.n_cols());
    Eigen::MatrixXd x(rows, d);
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index r = 0; r < rows; ++r)
        x(r, c) = data.value(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    cov_ = centered.transpose() * centered / n_;
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sd = std::sqrt(cov_(c, c));
      const double s = sd > 0.0 ? 1.0 / sd : 0.0;
      cov_.row(c) *= s;
      cov_.col(c) *= s;
    }
  }

  double local(std::size_t v, const std::vector<std::size_t>& parents) const {
    const auto vi = static_cast<Eigen::Index>(v);
    double resid = cov_(vi, vi);
    if (!parents.empty()) {
      const auto k = static_cast<Eigen::Index>(parents.size());
      Eigen::MatrixXd cpp(k, k);
      Eigen::VectorXd cpv(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        const auto pa = static_cast<Eigen::Index>(parents[static_cast<std::size_t>(a)]);
        cpv(a) = cov_(pa, vi);
        for (Eigen::Index b = 0; b < k; ++b) cpp(a, b) = cov_(pa, static_cast<Eigen::Index>(parents[static_cast<std::size_t>(b)]));
      }
      resid -= cpv.dot(cpp.ldlt().solve(cpv));
    }
    resid = std::max(resid, 1e-12);
    const double k = static_cast<double>(parents.size() + 1);
    return -0.5 * n_ * std::log(resid) - penalty_ * 0.5 * k * std::log(n_);
  }

 private:
  double n_;
  double penalty_;
  Eigen::MatrixXd cov_;
};

using NodeSet = std::vector<std::size_t>;

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

NodeSet set_minus(const NodeSet& a, const NodeSet& b) {
  NodeSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

NodeSet with(NodeSet p, std::size_t u) {
  if (!std::binary_search(p.begin(), p.end(), u)) p.insert(std::upper_bound(p.begin(), p.end(), u), u);
  return p;
}

NodeSet without(NodeSet p, std::size_t u) {
  auto it = std::find(p.begin(), p.end(), u);
  if (it != p.end()) p.erase(it);
  return p;
}

bool is_clique(const Cpdag& g, const NodeSet& s) {
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = a + 1; b < s.size(); ++b)
      if (!g.adjacent(s[a], s[b])) return false;
  return true;
}

/// Every subset of `pool` as a sorted vector.
std::vector<NodeSet> subsets(const NodeSet& pool) {
  std::vector<NodeSet> out;
  const std::size_t k = std::min<std::size_t>(pool.size(), 20);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    NodeSet s;
    for (std::size_t i = 0; i < k; ++i)
      if (mask >> i & 1U) s.push_back(pool[i]);
    out.push_back(std::move(s));
  }
  return out;
}

/// Whether some semi-directed path from `from` to `to` avoids `blocked`.
bool semi_directed_path(const Cpdag& g, std::size_t from, std::size_t to, const NodeSet& blocked) {
  std::vector<std::uint8_t> seen(g.size(), 0);
  for (auto b : blocked) seen[b] = 1;
  std::vector<std::size_t> todo{from};
  seen[from] = 1;
  while (!todo.empty()) {
    auto x = todo.back();
    todo.pop_back();
    for (std::size_t y = 0; y < g.size(); ++y) {
      if (!(g.has_directed(x, y) || g.has_undirected(x, y))) continue;
      if (y == to) return true;
      if (seen[y]) continue;
      seen[y] = 1;
      todo.push_back(y);
    }
  }
  return false;
}

NodeSet neighbors_adjacent_to(const Cpdag& g, std::size_t y, std::size_t x) {
  NodeSet out;
  for (auto v : g.undirected_neighbors(y))
    if (g.adjacent(v, x)) out.push_back(v);
  return out;
}

Cpdag complete(const Cpdag& pdag) {
  bool fallback = false;
  Dag dag = orient_to_dag(pdag, &fallback);
  return dag_to_cpdag(dag);
}

double total_score(const GaussianBic& score, const Dag& dag) {
  double s = 0.0;
  for (std::size_t v = 0; v < dag.size(); ++v) s += score.local(v, dag.parents(v));
  return s;
}

constexpr double kMinGain = 1e-9;

}  // namespace

GesResult ges_search(const Table& data, const GesConfig& config) {
  if (config.max_parents < 1) throw Error("GES max_parents must be at least 1");
  const std::size_t d = data.n_cols();
  GaussianBic score(data, config.penalty);
  Cpdag g(data.schema().names());
  GesResult result;

  // Forward phase: Insert(x, y, T).
  for (;;) {
    double best = kMinGain;
    std::size_t bx = d, by = d;
    NodeSet bt;
    for (std::size_t y = 0; y < d; ++y) {
      const NodeSet pa = g.parents(y);
      for (std::size_t x = 0; x < d; ++x) {
        if (x == y || g.adjacent(x, y)) continue;
        const NodeSet na = neighbors_adjacent_to(g, y, x);
        NodeSet t0;
        for (auto v : g.undirected_neighbors(y))
          if (!g.adjacent(v, x)) t0.push_back(v);
        for (const auto& t : subsets(t0)) {
          const NodeSet nat = set_union(na, t);
          const NodeSet base = set_union(nat, pa);
          if (base.size() + 1 > config.max_parents) continue;
          if (!is_clique(g, nat) || semi_directed_path(g, y, x, nat)) continue;
          const double gain = score.local(y, with(base, x)) - score.local(y, base);
          if (gain > best) {
            best = gain;
            bx = x;
            by = y;
            bt = t;
          }
        }
      }
    }
    if (bx == d) break;
    g.add_directed(bx, by);
    for (auto t : bt) g.orient(t, by);
    g = complete(g);
    result.forward_scores.push_back(total_score(score, consistent_extension(g)));
  }

  // Backward phase: Delete(x, y, H).
  for (;;) {
    double best = kMinGain;
    std::size_t bx = d, by = d;
    NodeSet bh;
    for (std::size_t y = 0; y < d; ++y) {
      const NodeSet pa = g.parents(y);
      for (std::size_t x = 0; x < d; ++x) {
        if (x == y || !(g.has_directed(x, y) || g.has_undirected(x, y))) continue;
        const NodeSet na = neighbors_adjacent_to(g, y, x);
        for (const auto& h : subsets(na)) {
          const NodeSet rest = set_minus(na, h);
          if (!is_clique(g, rest)) continue;
          const NodeSet base = without(set_union(rest, pa), x);
          const double gain = score.local(y, base) - score.local(y, with(base, x));
          if (gain > best) {
            best = gain;
            bx = x;
            by = y;
            bh = h;
          }
        }
      }
    }
    if (bx == d) break;
    g.remove_edge(bx, by);
    for (auto h : bh) {
      g.orient(by, h);
      if (g.has_undirected(bx, h)) g.orient(bx, h);
    }
    g = complete(g);
  }

  result.cpdag = g;
  result.dag = consistent_extension(g);
  result.final_score = total_score(score, result.dag);
  return result;
}

Cpdag ges_discover(const Table& data, const GesConfig& config) { return ges_search(data, config).cpdag; }

}  // namespace tabscm
