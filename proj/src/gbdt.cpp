#include "tabscm/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tabscm {

nlohmann::json gbdt_config_to_json(const GbdtConfig& c) {
  return {{"n_trees", c.n_trees},   {"depth", c.depth},   {"learning_rate", c.learning_rate},
          {"min_samples_leaf", c.min_samples_leaf}, {"lambda", c.lambda}, {"subsample", c.subsample},
          {"seed", c.seed}};
}

GbdtConfig gbdt_config_from_json(const nlohmann::json& j, GbdtConfig c) {
  c.n_trees = j.value("n_trees", c.n_trees);
  c.depth = j.value("depth", c.depth);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.lambda = j.value("lambda", c.lambda);
  c.subsample = j.value("subsample", c.subsample);
  c.seed = j.value("seed", c.seed);
  return c;
}

double RegressionTree::predict(const double* row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[n.feature] < n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::vector<std::vector<std::uint32_t>> presort_features(const Eigen::MatrixXd& x) {
  std::vector<std::vector<std::uint32_t>> out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& idx = out[static_cast<std::size_t>(f)];
    idx.resize(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), 0U);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
  return out;
}

RegressionTree fit_tree(const Eigen::MatrixXd& x, const std::vector<std::vector<std::uint32_t>>& sorted_by_feature,
                        std::span<const double> grad, std::span<const double> hess,
                        const std::vector<std::uint8_t>& in_sample, const GbdtConfig& config) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto n_features = static_cast<std::size_t>(x.cols());
  const double lambda = config.lambda;
  const std::size_t min_leaf = std::max<std::size_t>(config.min_samples_leaf, 1);

  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<std::int32_t> node_of(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (in_sample[i]) node_of[i] = 0;

  struct Stats {
    double g = 0.0, h = 0.0;
    std::size_t count = 0;
  };
  auto score = [lambda](double g, double h) { return g * g / (h + lambda); };

  std::vector<std::int32_t> active{0};
  for (std::size_t level = 0; level < config.depth && !active.empty(); ++level) {
    std::vector<std::int32_t> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < active.size(); ++s) slot_of[static_cast<std::size_t>(active[s])] = static_cast<std::int32_t>(s);
    const std::size_t k = active.size();
    std::vector<Stats> total(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] < 0) continue;
      const auto s = slot_of[static_cast<std::size_t>(node_of[i])];
      if (s < 0) continue;
      auto& t = total[static_cast<std::size_t>(s)];
      t.g += grad[i];
      t.h += hess[i];
      ++t.count;
    }

    std::vector<double> best_gain(k, 1e-12);
    std::vector<std::int32_t> best_feature(k, -1);
    std::vector<double> best_threshold(k, 0.0);
    std::vector<Stats> left(k);
    std::vector<double> prev(k);
    for (std::size_t f = 0; f < n_features; ++f) {
      std::fill(left.begin(), left.end(), Stats{});
      for (auto i : sorted_by_feature[f]) {
        if (node_of[i] < 0) continue;
        const auto si = slot_of[static_cast<std::size_t>(node_of[i])];
        if (si < 0) continue;
        const auto s = static_cast<std::size_t>(si);
        const double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
        auto& l = left[s];
        const auto& t = total[s];
        if (l.count >= min_leaf && t.count - l.count >= min_leaf && v > prev[s]) {
          const double gain = score(l.g, l.h) + score(t.g - l.g, t.h - l.h) - score(t.g, t.h);
          if (gain > best_gain[s]) {
            best_gain[s] = gain;
            best_feature[s] = static_cast<std::int32_t>(f);
            double thr = prev[s] + 0.5 * (v - prev[s]);
            if (!(thr > prev[s])) thr = v;
            best_threshold[s] = thr;
          }
        }
        l.g += grad[i];
        l.h += hess[i];
        ++l.count;
        prev[s] = v;
      }
    }

    std::vector<std::int32_t> next;
    for (std::size_t s = 0; s < k; ++s) {
      if (best_feature[s] < 0) continue;
      const auto id = static_cast<std::size_t>(active[s]);
      const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[id].feature = best_feature[s];
      tree.nodes[id].threshold = best_threshold[s];
      tree.nodes[id].left = left_id;
      tree.nodes[id].right = left_id + 1;
      next.push_back(left_id);
      next.push_back(left_id + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(node_of[i])];
      if (node.feature < 0) continue;
      node_of[i] = x(static_cast<Eigen::Index>(i), node.feature) < node.threshold ? node.left : node.right;
    }
    active = std::move(next);
  }

  std::vector<Stats> leaf(tree.nodes.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (node_of[i] < 0) continue;
    auto& s = leaf[static_cast<std::size_t>(node_of[i])];
    s.g += grad[i];
    s.h += hess[i];
  }
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    if (tree.nodes[id].feature < 0) tree.nodes[id].value = -leaf[id].g / (leaf[id].h + lambda);
  }
  return tree;
}

namespace {

std::vector<std::uint8_t> draw_subsample(std::size_t n, double fraction, std::uint64_t seed, std::size_t round) {
  std::vector<std::uint8_t> mask(n, 1);
  if (fraction >= 1.0) return mask;
  Stream rng(seed, 0x5eed, round);
  for (auto& m : mask) m = rng.uniform() < fraction ? 1 : 0;
  return mask;
}

void shrink(RegressionTree& tree, double lr) {
  for (auto& node : tree.nodes)
    if (node.feature < 0) node.value *= lr;
}

nlohmann::json tree_to_json(const RegressionTree& t) {
  std::vector<std::int32_t> feature, left, right;
  std::vector<double> threshold, value;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    left.push_back(n.left);
    right.push_back(n.right);
    threshold.push_back(n.threshold);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

RegressionTree tree_from_json(const nlohmann::json& j, std::size_t n_features) {
  auto feature = j.at("feature").get<std::vector<std::int32_t>>();
  auto threshold = j.at("threshold").get<std::vector<double>>();
  auto left = j.at("left").get<std::vector<std::int32_t>>();
  auto right = j.at("right").get<std::vector<std::int32_t>>();
  auto value = j.at("value").get<std::vector<double>>();
  const std::size_t m = feature.size();
  if (m == 0 || threshold.size() != m || left.size() != m || right.size() != m || value.size() != m) {
    throw Error("malformed tree arrays");
  }
  RegressionTree t;
  for (std::size_t i = 0; i < m; ++i) {
    RegressionTree::Node n{feature[i], threshold[i], left[i], right[i], value[i]};
    if (n.feature >= 0) {
      const auto lim = static_cast<std::int32_t>(m);
      if (static_cast<std::size_t>(n.feature) >= n_features || n.left <= static_cast<std::int32_t>(i) ||
          n.right <= static_cast<std::int32_t>(i) || n.left >= lim || n.right >= lim) {
        throw Error("malformed tree node");
      }
    }
    t.nodes.push_back(n);
  }
  return t;
}

}  // namespace

GbdtClassifier GbdtClassifier::fit(const Eigen::MatrixXd& x, std::span<const std::int32_t> labels,
                                   std::size_t n_classes, const GbdtConfig& config) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw FitError("boosted trees need at least one sample");
  if (labels.size() != n) throw FitError("feature and label lengths differ");
  GbdtClassifier m;
  m.n_classes_ = n_classes;
  m.n_features_ = static_cast<std::size_t>(x.cols());
  m.learning_rate_ = config.learning_rate;

  std::vector<std::size_t> counts(n_classes, 0);
  for (auto c : labels) {
    if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw FitError("class label out of range");
    ++counts[static_cast<std::size_t>(c)];
  }
  std::vector<std::int32_t> slot_of(n_classes, -1);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) continue;
    slot_of[c] = static_cast<std::int32_t>(m.classes_.size());
    m.classes_.push_back(static_cast<std::int32_t>(c));
    m.base_.push_back(std::log(static_cast<double>(counts[c]) / static_cast<double>(n)));
  }
  const std::size_t k = m.classes_.size();
  if (k <= 1) return m;

  const auto sorted = presort_features(x);
  std::vector<double> scores(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) scores[i * k + c] = m.base_[c];
  std::vector<double> prob(n * k), grad(n), hess(n);
  std::vector<double> row(m.n_features_);

  auto softmax_all = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      const double* s = &scores[i * k];
      const double mx = *std::max_element(s, s + k);
      double z = 0.0;
      for (std::size_t c = 0; c < k; ++c) z += std::exp(s[c] - mx);
      for (std::size_t c = 0; c < k; ++c) prob[i * k + c] = std::exp(s[c] - mx) / z;
    }
  };

  for (std::size_t round = 0; round < config.n_trees; ++round) {
    softmax_all();
    const auto mask = draw_subsample(n, config.subsample, config.seed, round);
    std::vector<RegressionTree> trees;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = prob[i * k + c];
        const double y = slot_of[static_cast<std::size_t>(labels[i])] == static_cast<std::int32_t>(c) ? 1.0 : 0.0;
        grad[i] = p - y;
        hess[i] = std::max(p * (1.0 - p), 1e-16);
      }
      auto tree = fit_tree(x, sorted, grad, hess, mask, config);
      shrink(tree, config.learning_rate);
      trees.push_back(std::move(tree));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < m.n_features_; ++f) row[f] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
      for (std::size_t c = 0; c < k; ++c) scores[i * k + c] += trees[c].predict(row.data());
    }
    m.rounds_.push_back(std::move(trees));
  }
  softmax_all();
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(slot_of[static_cast<std::size_t>(labels[i])]);
    ll -= std::log(std::max(prob[i * k + c], 1e-300));
  }
  m.train_log_loss_ = ll / static_cast<double>(n);
  return m;
}

void GbdtClassifier::predict_proba(const double* row, double* out) const {
  std::fill(out, out + n_classes_, 0.0);
  const std::size_t k = classes_.size();
  if (k == 0) return;
  if (k == 1) {
    out[classes_[0]] = 1.0;
    return;
  }
  std::vector<double> s(base_);
  for (const auto& trees : rounds_)
    for (std::size_t c = 0; c < k; ++c) s[c] += trees[c].predict(row);
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    s[c] = std::exp(s[c] - mx);
    z += s[c];
  }
  for (std::size_t c = 0; c < k; ++c) out[classes_[c]] = s[c] / z;
}

std::vector<double> GbdtClassifier::predict_proba(const double* row) const {
  std::vector<double> out(n_classes_);
  predict_proba(row, out.data());
  return out;
}

Eigen::MatrixXd GbdtClassifier::predict_proba(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(n_classes_));
  std::vector<double> row(static_cast<std::size_t>(x.cols())), p(n_classes_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index f = 0; f < x.cols(); ++f) row[static_cast<std::size_t>(f)] = x(i, f);
    predict_proba(row.data(), p.data());
    for (std::size_t c = 0; c < n_classes_; ++c) out(i, static_cast<Eigen::Index>(c)) = p[c];
  }
  return out;
}

nlohmann::json GbdtClassifier::to_json() const {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& trees : rounds_) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& t : trees) r.push_back(tree_to_json(t));
    rounds.push_back(std::move(r));
  }
  return {{"kind", "gbdt"},
          {"n_classes", n_classes_},
          {"n_features", n_features_},
          {"learning_rate", learning_rate_},
          {"classes", classes_},
          {"base", base_},
          {"train_log_loss", train_log_loss_},
          {"rounds", rounds}};
}

GbdtClassifier GbdtClassifier::from_json(const nlohmann::json& j) {
  GbdtClassifier m;
  m.n_classes_ = j.at("n_classes").get<std::size_t>();
  m.n_features_ = j.at("n_features").get<std::size_t>();
  m.learning_rate_ = j.at("learning_rate").get<double>();
  m.classes_ = j.at("classes").get<std::vector<std::int32_t>>();
  m.base_ = j.at("base").get<std::vector<double>>();
  m.train_log_loss_ = j.at("train_log_loss").get<double>();
  if (m.base_.size() != m.classes_.size()) throw Error("gbdt class list and base scores differ in length");
  for (auto c : m.classes_)
    if (c < 0 || static_cast<std::size_t>(c) >= m.n_classes_) throw Error("gbdt class code out of range");
  for (const auto& r : j.at("rounds")) {
    std::vector<RegressionTree> trees;
    for (const auto& t : r) trees.push_back(tree_from_json(t, m.n_features_));
    if (trees.size() != m.classes_.size()) throw Error("gbdt round has the wrong number of trees");
    m.rounds_.push_back(std::move(trees));
  }
  return m;
}

GbdtRegressor GbdtRegressor::fit(const Eigen::MatrixXd& x, std::span<const double> y, const GbdtConfig& config) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw FitError("boosted trees need at least one sample");
  if (y.size() != n) throw FitError("feature and target lengths differ");
  GbdtRegressor m;
  m.learning_rate_ = config.learning_rate;
  m.base_ = mean(y);
  const auto sorted = presort_features(x);
  std::vector<double> pred(n, m.base_), grad(n), hess(n, 1.0);
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (std::size_t round = 0; round < config.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - y[i];
    const auto mask = draw_subsample(n, config.subsample, config.seed, round);
    auto tree = fit_tree(x, sorted, grad, hess, mask, config);
    shrink(tree, config.learning_rate);
    for (std::size_t i = 0; i < n; ++i) {
      for (Eigen::Index f = 0; f < x.cols(); ++f) row[static_cast<std::size_t>(f)] = x(static_cast<Eigen::Index>(i), f);
      pred[i] += tree.predict(row.data());
    }
    m.trees_.push_back(std::move(tree));
  }
  return m;
}

double GbdtRegressor::predict(const double* row) const {
  double s = base_;
  for (const auto& t : trees_) s += t.predict(row);
  return s;
}

std::vector<double> GbdtRegressor::predict(const Eigen::MatrixXd& x) const {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index f = 0; f < x.cols(); ++f) row[static_cast<std::size_t>(f)] = x(i, f);
    out[static_cast<std::size_t>(i)] = predict(row.data());
  }
  return out;
}

}  // namespace tabscm
