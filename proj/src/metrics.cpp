#include "tabscm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "tabscm/common.hpp"
#include "tabscm/preprocess.hpp"

namespace tabscm {

namespace {

void require_same_schema(const Table& real, const Table& syn) {
  if (!(real.schema() == syn.schema())) throw SchemaError("real and synthetic tables have different schemas");
  if (real.has_missing() || syn.has_missing()) throw SchemaError("metrics need tables without missing cells");
}

}  // namespace

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("KS statistic needs two nonempty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j == y.size() || (i < x.size() && x[i] <= y[j])) {
      v = x[i];
    } else {
      v = y[j];
    }
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return best;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  const std::size_t k = std::max(p.size(), q.size());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    s += std::abs(a - b);
  }
  return 0.5 * s;
}

std::vector<double> category_frequencies(std::span<const std::int32_t> codes, std::size_t n_categories) {
  std::vector<double> f(n_categories, 0.0);
  if (codes.empty()) return f;
  std::vector<std::size_t> counts(n_categories, 0);
  for (auto c : codes) {
    if (c < 0 || static_cast<std::size_t>(c) >= n_categories) throw Error("category code out of range");
    ++counts[static_cast<std::size_t>(c)];
  }
  for (std::size_t k = 0; k < n_categories; ++k) {
    f[k] = static_cast<double>(counts[k]) / static_cast<double>(codes.size());
  }
  return f;
}

DensityError density_error(const Table& real, const Table& syn) {
  require_same_schema(real, syn);
  const auto& schema = real.schema();
  DensityError out;
  if (schema.size() == 0) return out;
  double total = 0.0;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    double v;
    if (schema[c].is_numerical()) {
      v = ks_statistic(real.numeric(c), syn.numeric(c));
    } else {
      const auto k = schema[c].categories.size();
      v = tv_distance(category_frequencies(real.codes(c), k), category_frequencies(syn.codes(c), k));
    }
    out.per_column[schema[c].name] = v;
    total += v;
  }
  out.e_den = total / static_cast<double>(schema.size());
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw Error("pearson correlation needs equal nonempty inputs");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> equal_frequency_edges(std::span<const double> reference, std::size_t bins) {
  if (bins < 1) throw Error("bin count must be positive");
  std::vector<double> sorted(reference.begin(), reference.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  if (sorted.empty()) return edges;
  for (std::size_t k = 1; k < bins; ++k) {
    const double e = sorted_quantile(sorted, static_cast<double>(k) / static_cast<double>(bins));
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

std::int32_t bin_of(const std::vector<double>& edges, double x) {
  return static_cast<std::int32_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

namespace {

struct Discrete {
  std::vector<std::int32_t> real;
  std::vector<std::int32_t> syn;
  std::size_t levels = 0;
};

Discrete discretize(const Table& real, const Table& syn, std::size_t c, std::size_t bins) {
  Discrete d;
  const auto& cs = real.schema()[c];
  if (cs.is_categorical()) {
    d.real.assign(real.codes(c).begin(), real.codes(c).end());
    d.syn.assign(syn.codes(c).begin(), syn.codes(c).end());
    d.levels = cs.categories.size();
    return d;
  }
  const auto edges = equal_frequency_edges(real.numeric(c), bins);
  d.levels = edges.size() + 1;
  for (double x : real.numeric(c)) d.real.push_back(bin_of(edges, x));
  for (double x : syn.numeric(c)) d.syn.push_back(bin_of(edges, x));
  return d;
}

std::vector<double> joint_frequencies(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b,
                                      std::size_t levels_b, std::size_t cells) {
  std::vector<double> f(cells, 0.0);
  if (a.empty()) return f;
  std::vector<std::size_t> counts(cells, 0);
  for (std::size_t r = 0; r < a.size(); ++r) {
    ++counts[static_cast<std::size_t>(a[r]) * levels_b + static_cast<std::size_t>(b[r])];
  }
  for (std::size_t k = 0; k < cells; ++k) f[k] = static_cast<double>(counts[k]) / static_cast<double>(a.size());
  return f;
}

}  // namespace

CorrError corr_error(const Table& real, const Table& syn, std::size_t bins) {
  require_same_schema(real, syn);
  const auto& schema = real.schema();
  const std::size_t d = schema.size();
  if (d < 2) throw SchemaError("correlation error needs at least two columns");

  CorrError out;
  double num_sum = 0.0;
  double cat_sum = 0.0;
  std::vector<Discrete> discrete(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (schema[c].is_categorical()) discrete[c] = discretize(real, syn, c, bins);
  }
  auto discrete_of = [&](std::size_t c) -> const Discrete& {
    if (discrete[c].levels == 0) discrete[c] = discretize(real, syn, c, bins);
    return discrete[c];
  };
  bool warned = false;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (schema[i].is_numerical() && schema[j].is_numerical()) {
        const auto ri = real.numeric(i), rj = real.numeric(j), si = syn.numeric(i), sj = syn.numeric(j);
        const bool constant = population_sd(ri) == 0.0 || population_sd(rj) == 0.0 || population_sd(si) == 0.0 ||
                              population_sd(sj) == 0.0;
        if (constant && !warned) {
          spdlog::warn("constant column in a correlation pair; its correlation is taken as 0");
          warned = true;
        }
        num_sum += std::abs(pearson(ri, rj) - pearson(si, sj));
        ++out.numeric_pairs;
      } else {
        const auto& a = discrete_of(i);
        const auto& b = discrete_of(j);
        const std::size_t cells = a.levels * b.levels;
        cat_sum += tv_distance(joint_frequencies(a.real, b.real, b.levels, cells),
                               joint_frequencies(a.syn, b.syn, b.levels, cells));
        ++out.categorical_pairs;
      }
    }
  }
  if (out.numeric_pairs) out.e_num = num_sum / static_cast<double>(out.numeric_pairs);
  if (out.categorical_pairs) out.e_cat = cat_sum / static_cast<double>(out.categorical_pairs);
  if (out.e_num && out.e_cat) {
    out.e_corr = 0.5 * (*out.e_num + *out.e_cat);
  } else {
    out.e_corr = out.e_num ? *out.e_num : *out.e_cat;
  }
  return out;
}

DcrResult dcr(const Table& real, const Table& syn) {
  require_same_schema(real, syn);
  if (real.n_rows() == 0) throw Error("DCR needs a nonempty real table");
  const auto& schema = real.schema();
  const std::size_t d = schema.size();
  const auto standardizer = Standardizer::fit(real);
  const std::size_t n = real.n_rows();
  const std::size_t m = syn.n_rows();

  // Row-major copies: standardized numerics and codes.
  std::vector<double> rv(n * d), sv(m * d);
  for (std::size_t c = 0; c < d; ++c) {
    const auto& sc = standardizer.scale(c);
    for (std::size_t r = 0; r < n; ++r) {
      rv[r * d + c] = schema[c].is_numerical() ? sc.forward(real.numeric(c)[r]) : real.codes(c)[r];
    }
    for (std::size_t r = 0; r < m; ++r) {
      sv[r * d + c] = schema[c].is_numerical() ? sc.forward(syn.numeric(c)[r]) : syn.codes(c)[r];
    }
  }
  std::vector<std::uint8_t> categorical(d);
  for (std::size_t c = 0; c < d; ++c) categorical[c] = schema[c].is_categorical();

  DcrResult out;
  out.distances.assign(m, 0.0);
  parallel_for(0, m, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t s = lo; s < hi; ++s) {
      const double* x = &sv[s * d];
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < n; ++r) {
        const double* y = &rv[r * d];
        double dist = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          dist += categorical[c] ? (x[c] != y[c] ? 1.0 : 0.0) : std::abs(x[c] - y[c]);
        }
        best = std::min(best, dist);
      }
      out.distances[s] = best;
    }
  });
  if (m > 0) {
    std::vector<double> sorted = out.distances;
    std::sort(sorted.begin(), sorted.end());
    out.median = sorted_quantile(sorted, 0.5);
    out.q05 = sorted_quantile(sorted, 0.05);
    out.q25 = sorted_quantile(sorted, 0.25);
    out.q75 = sorted_quantile(sorted, 0.75);
    out.q95 = sorted_quantile(sorted, 0.95);
  }
  return out;
}

double auc(std::span<const double> scores, std::span<const std::int32_t> labels) {
  if (scores.size() != labels.size()) throw Error("AUC needs one label per score");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Doubled mid-ranks keep the rank sum integral under ties.
  std::uint64_t rank_sum2 = 0;
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const std::uint64_t doubled = static_cast<std::uint64_t>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        rank_sum2 += doubled;
        ++n_pos;
      } else if (labels[idx[k]] != 0) {
        throw Error("AUC labels must be 0 or 1");
      }
    }
    i = j;
  }
  const std::uint64_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("AUC needs both positive and negative labels");
  const std::uint64_t u2 = rank_sum2 - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

Eigen::MatrixXd encode_features(const Table& table, const Table& reference, const std::vector<std::size_t>& exclude) {
  const auto& schema = table.schema();
  const auto standardizer = Standardizer::fit(reference);
  std::size_t width = 0;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (std::find(exclude.begin(), exclude.end(), c) != exclude.end()) continue;
    width += schema[c].is_numerical() ? 1 : schema[c].categories.size();
  }
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(table.n_rows()), static_cast<Eigen::Index>(width));
  Eigen::Index off = 0;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (std::find(exclude.begin(), exclude.end(), c) != exclude.end()) continue;
    if (schema[c].is_numerical()) {
      const auto& sc = standardizer.scale(c);
      for (std::size_t r = 0; r < table.n_rows(); ++r) x(static_cast<Eigen::Index>(r), off) = sc.forward(table.numeric(c)[r]);
      ++off;
    } else {
      for (std::size_t r = 0; r < table.n_rows(); ++r) x(static_cast<Eigen::Index>(r), off + table.codes(c)[r]) = 1.0;
      off += static_cast<Eigen::Index>(schema[c].categories.size());
    }
  }
  return x;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

C2stResult c2st(const Table& real, const Table& syn, const C2stConfig& config) {
  require_same_schema(real, syn);
  if (real.n_rows() < 50 || syn.n_rows() < 50) throw Error("C2ST needs at least 50 real and 50 synthetic rows");
  if (config.n_splits == 0) throw Error("C2ST needs at least one split");
  const Table both = real.concat(syn);
  const Eigen::MatrixXd x = encode_features(both, real);
  const std::size_t n = both.n_rows();
  std::vector<std::int32_t> labels(n, 0);
  for (std::size_t r = real.n_rows(); r < n; ++r) labels[r] = 1;
  const std::size_t n_train = (3 * n) / 4;

  C2stResult out;
  for (std::size_t split = 0; split < config.n_splits; ++split) {
    std::vector<std::size_t> perm;
    std::vector<std::int32_t> y_train, y_test;
    for (std::uint64_t attempt = 0;; ++attempt) {
      Stream rng(config.seed, split, attempt);
      perm = shuffled_indices(n, rng);
      y_train.clear();
      y_test.clear();
      for (std::size_t i = 0; i < n; ++i) (i < n_train ? y_train : y_test).push_back(labels[perm[i]]);
      auto both_classes = [](const std::vector<std::int32_t>& y) {
        return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
      };
      if (both_classes(y_train) && both_classes(y_test)) break;
      if (attempt > 100) throw Error("C2ST could not draw a split containing both classes");
    }
    const std::span<const std::size_t> train_rows(perm.data(), n_train);
    const std::span<const std::size_t> test_rows(perm.data() + n_train, n - n_train);
    GbdtConfig gc = config.gbdt;
    gc.seed = derive_seed(config.seed, split, 0xc2);
    const auto model = GbdtClassifier::fit(take_rows(x, train_rows), y_train, 2, gc);
    const Eigen::MatrixXd proba = model.predict_proba(take_rows(x, test_rows));
    std::vector<double> scores(test_rows.size());
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = proba(static_cast<Eigen::Index>(i), 1);
    out.aucs.push_back(auc(scores, y_test));
  }
  out.mean_auc = mean(out.aucs);
  out.score = std::clamp(1.0 - (2.0 * out.mean_auc - 1.0), 0.0, 1.0);
  return out;
}

std::string_view to_string(TaskKind task) { return task == TaskKind::Classification ? "classification" : "regression"; }

TaskKind parse_task(std::string_view text) {
  if (text == "classification") return TaskKind::Classification;
  if (text == "regression") return TaskKind::Regression;
  throw ParseError("unknown task '" + std::string(text) + "' (expected classification or regression)");
}

UtilityResult utility_eval(const Table& syn_train, const Table& real_test, const std::string& target, TaskKind task,
                           const UtilityConfig& config) {
  require_same_schema(syn_train, real_test);
  const auto& schema = syn_train.schema();
  const auto t = schema.index_of(target);
  if ((task == TaskKind::Classification) != schema[t].is_categorical()) {
    throw SchemaError("task " + std::string(to_string(task)) + " does not match the kind of column '" + target + "'");
  }
  if (syn_train.n_rows() == 0 || real_test.n_rows() == 0) throw Error("utility evaluation needs nonempty tables");
  if (config.n_repeats == 0) throw Error("utility evaluation needs at least one repeat");
  const Eigen::MatrixXd x_train = encode_features(syn_train, syn_train, {t});
  const Eigen::MatrixXd x_test = encode_features(real_test, syn_train, {t});

  UtilityResult out;
  if (task == TaskKind::Classification) {
    out.metric = "auc";
    const auto y_train = syn_train.codes(t);
    const auto y_test = real_test.codes(t);
    const std::size_t k = schema[t].categories.size();
    if (std::adjacent_find(y_train.begin(), y_train.end(), std::not_equal_to<>()) == y_train.end()) {
      throw FitError("degenerate training target: '" + target + "' has a single class");
    }
    for (std::size_t rep = 0; rep < config.n_repeats; ++rep) {
      GbdtConfig gc = config.gbdt;
      gc.seed = derive_seed(config.seed, rep, 0x07);
      const auto model = GbdtClassifier::fit(x_train, y_train, k, gc);
      const Eigen::MatrixXd proba = model.predict_proba(x_test);
      // Macro one-vs-rest over classes with both outcomes in the test set.
      double total = 0.0;
      std::size_t used = 0;
      std::vector<std::int32_t> labels(y_test.size());
      std::vector<double> scores(y_test.size());
      for (std::size_t c = 0; c < k; ++c) {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < y_test.size(); ++i) {
          labels[i] = y_test[i] == static_cast<std::int32_t>(c) ? 1 : 0;
          pos += static_cast<std::size_t>(labels[i]);
          scores[i] = proba(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        }
        if (pos == 0 || pos == y_test.size()) continue;
        total += auc(scores, labels);
        ++used;
        if (k == 2) break;  // both one-vs-rest AUCs coincide
      }
      if (used == 0) throw Error("utility evaluation: real test set has a single class");
      out.values.push_back(total / static_cast<double>(used));
    }
  } else {
    out.metric = "rmse";
    const auto y_train = syn_train.numeric(t);
    const auto y_test = real_test.numeric(t);
    const double mu = mean(y_train);
    const double sd = population_sd(y_train);
    if (sd == 0.0) throw FitError("degenerate training target: '" + target + "' is constant");
    std::vector<double> z(y_train.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (y_train[i] - mu) / sd;
    for (std::size_t rep = 0; rep < config.n_repeats; ++rep) {
      GbdtConfig gc = config.gbdt;
      gc.seed = derive_seed(config.seed, rep, 0x08);
      const auto model = GbdtRegressor::fit(x_train, z, gc);
      const auto pred = model.predict(x_test);
      double sse = 0.0;
      for (std::size_t i = 0; i < y_test.size(); ++i) {
        const double e = pred[i] - (y_test[i] - mu) / sd;
        sse += e * e;
      }
      out.values.push_back(std::sqrt(sse / static_cast<double>(y_test.size())));
    }
  }
  out.mean = mean(out.values);
  out.stddev = population_sd(out.values);
  return out;
}

AlphaBeta alpha_precision_beta_recall(const Table& real, const Table& syn, std::size_t grid, std::size_t k) {
  require_same_schema(real, syn);
  const std::size_t n = real.n_rows();
  const std::size_t m = syn.n_rows();
  if (grid == 0 || n < grid || m < grid) throw Error("alpha-precision needs at least `grid` real and synthetic rows");
  if (k == 0 || k >= n) throw Error("alpha-precision neighbour count must be in [1, n)");
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMatrix xr = encode_features(real, real);
  const RowMatrix xs = encode_features(syn, real);
  const Eigen::RowVectorXd center = xr.colwise().mean();
  std::vector<double> dr(n), ds(m);
  for (std::size_t i = 0; i < n; ++i) dr[i] = (xr.row(static_cast<Eigen::Index>(i)) - center).norm();
  for (std::size_t i = 0; i < m; ++i) ds[i] = (xs.row(static_cast<Eigen::Index>(i)) - center).norm();
  std::vector<double> dr_sorted = dr, ds_sorted = ds;
  std::sort(dr_sorted.begin(), dr_sorted.end());
  std::sort(ds_sorted.begin(), ds_sorted.end());

  // k-NN radius of each real row among real rows, and whether a synthetic row
  // falls inside it.
  std::vector<std::uint8_t> covered(n, 0);
  parallel_for(0, n, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> dist(n);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto xi = xr.row(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < n; ++j) dist[j] = (xr.row(static_cast<Eigen::Index>(j)) - xi).squaredNorm();
      std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      const double radius = dist[k];  // dist contains the row itself at 0
      for (std::size_t s = 0; s < m; ++s) {
        if ((xs.row(static_cast<Eigen::Index>(s)) - xi).squaredNorm() <= radius) {
          covered[i] = 1;
          break;
        }
      }
    }
  });
  std::vector<std::size_t> by_centrality(n);
  std::iota(by_centrality.begin(), by_centrality.end(), 0);
  std::stable_sort(by_centrality.begin(), by_centrality.end(), [&](std::size_t a, std::size_t b) { return dr[a] < dr[b]; });

  AlphaBeta out;
  double dev = 0.0, rec = 0.0;
  for (std::size_t g = 1; g <= grid; ++g) {
    const double level = static_cast<double>(g) / static_cast<double>(grid);
    const auto count = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9));
    const double radius = dr_sorted[std::max<std::size_t>(count, 1) - 1];
    const auto inside = static_cast<std::size_t>(std::upper_bound(ds_sorted.begin(), ds_sorted.end(), radius) - ds_sorted.begin());
    const double p = static_cast<double>(inside) / static_cast<double>(m);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < std::max<std::size_t>(count, 1); ++i) hit += covered[by_centrality[i]];
    const double r = static_cast<double>(hit) / static_cast<double>(std::max<std::size_t>(count, 1));
    out.levels.push_back(level);
    out.precision_curve.push_back(p);
    out.recall_curve.push_back(r);
    dev += std::abs(p - level);
    rec += r;
  }
  out.alpha_precision = std::clamp(1.0 - 2.0 * dev / static_cast<double>(grid), 0.0, 1.0);
  out.beta_recall = rec / static_cast<double>(grid);
  return out;
}

FnrFpr fnr_fpr(std::span<const std::int32_t> predictions, std::span<const std::int32_t> truth, std::int32_t positive) {
  if (predictions.size() != truth.size()) throw Error("FNR/FPR needs one prediction per label");
  std::vector<std::int32_t> seen;
  for (auto span : {predictions, truth}) {
    for (auto c : span) {
      if (std::find(seen.begin(), seen.end(), c) == seen.end()) seen.push_back(c);
    }
  }
  if (seen.size() > 2) throw Error("FNR/FPR needs binary labels, found " + std::to_string(seen.size()) + " classes");
  std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predictions[i] == positive;
    const bool t = truth[i] == positive;
    tp += p && t;
    fn += !p && t;
    fp += p && !t;
    tn += !p && !t;
  }
  FnrFpr out;
  if (tp + fn > 0) {
    out.fnr = static_cast<double>(fn) / static_cast<double>(tp + fn);
  } else {
    spdlog::warn("FNR undefined: no positive labels");
  }
  if (fp + tn > 0) {
    out.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
  } else {
    spdlog::warn("FPR undefined: no negative labels");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["e_den"] = density.e_den;
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [name, v] : density.per_column) per[name] = v;
  j["per_column"] = per;
  j["e_corr"] = corr.e_corr;
  j["e_corr_components"] = {{"numeric", optional_json(corr.e_num)},
                            {"categorical", optional_json(corr.e_cat)},
                            {"numeric_pairs", corr.numeric_pairs},
                            {"categorical_pairs", corr.categorical_pairs}};
  j["dcr_median"] = dcr.median;
  j["dcr_quantiles"] = {{"q05", dcr.q05}, {"q25", dcr.q25}, {"q50", dcr.median}, {"q75", dcr.q75}, {"q95", dcr.q95}};
  j["c2st"] = c2st ? nlohmann::json(c2st->score) : nlohmann::json(nullptr);
  if (c2st) j["c2st_aucs"] = c2st->aucs;
  if (utility) {
    j["utility"] = {{"metric", utility->metric}, {"mean", utility->mean}, {"stddev", utility->stddev},
                    {"values", utility->values}};
  } else {
    j["utility"] = nullptr;
  }
  j["alpha_precision"] = alpha_beta ? nlohmann::json(alpha_beta->alpha_precision) : nlohmann::json(nullptr);
  j["beta_recall"] = alpha_beta ? nlohmann::json(alpha_beta->beta_recall) : nlohmann::json(nullptr);
  if (alpha_beta) {
    j["alpha_beta_curves"] = {{"levels", alpha_beta->levels},
                              {"precision", alpha_beta->precision_curve},
                              {"recall", alpha_beta->recall_curve},
                              {"reduction", "precision = 1 - 2 mean|P(a) - a|; recall = mean R(b)"}};
  }
  nlohmann::json rates = nlohmann::json::object();
  for (const auto& [name, v] : violation_rates) rates[name] = v;
  j["violation_rates"] = rates;
  j["fnr"] = fnr_fpr ? optional_json(fnr_fpr->fnr) : nlohmann::json(nullptr);
  j["fpr"] = fnr_fpr ? optional_json(fnr_fpr->fpr) : nlohmann::json(nullptr);
  if (fnr_fpr) j["positive_class"] = positive_class;
  return j;
}

nlohmann::json evaluation_config_to_json(const EvaluationConfig& c) {
  nlohmann::json j{{"bins", c.bins},
                   {"c2st", c.run_c2st},
                   {"c2st_splits", c.c2st.n_splits},
                   {"alpha_beta", c.run_alpha_beta},
                   {"grid", c.grid},
                   {"repeats", c.utility.n_repeats},
                   {"seed", c.c2st.seed}};
  j["target"] = c.target ? nlohmann::json(*c.target) : nlohmann::json(nullptr);
  j["task"] = c.task ? nlohmann::json(std::string(to_string(*c.task))) : nlohmann::json(nullptr);
  j["positive"] = c.positive ? nlohmann::json(*c.positive) : nlohmann::json(nullptr);
  j["gbdt"] = gbdt_config_to_json(c.utility.gbdt);
  return j;
}

EvaluationConfig evaluation_config_from_json(const nlohmann::json& j, EvaluationConfig c) {
  if (!j.is_object()) throw ParseError("evaluation config must be an object");
  try {
    c.bins = j.value("bins", c.bins);
    c.run_c2st = j.value("c2st", c.run_c2st);
    c.c2st.n_splits = j.value("c2st_splits", c.c2st.n_splits);
    c.run_alpha_beta = j.value("alpha_beta", c.run_alpha_beta);
    c.grid = j.value("grid", c.grid);
    c.utility.n_repeats = j.value("repeats", c.utility.n_repeats);
    if (j.contains("seed")) {
      c.c2st.seed = j["seed"].get<std::uint64_t>();
      c.utility.seed = c.c2st.seed;
    }
    if (j.contains("target") && !j["target"].is_null()) c.target = j["target"].get<std::string>();
    if (j.contains("task") && !j["task"].is_null()) c.task = parse_task(j["task"].get<std::string>());
    if (j.contains("positive") && !j["positive"].is_null()) c.positive = j["positive"].get<std::string>();
    if (j.contains("gbdt")) {
      c.utility.gbdt = gbdt_config_from_json(j["gbdt"], c.utility.gbdt);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("evaluation config: ") + e.what());
  }
  return c;
}

MetricsReport evaluate(const Table& real, const Table& syn, const EvaluationConfig& config) {
  require_same_schema(real, syn);
  MetricsReport report;
  report.density = density_error(real, syn);
  spdlog::info("density error {:.4f}", report.density.e_den);
  report.corr = corr_error(real, syn, config.bins);
  spdlog::info("correlation error {:.4f}", report.corr.e_corr);
  report.dcr = dcr(real, syn);
  if (config.run_c2st) {
    report.c2st = c2st(real, syn, config.c2st);
    spdlog::info("c2st {:.4f}", report.c2st->score);
  }
  if (config.run_alpha_beta) report.alpha_beta = alpha_precision_beta_recall(real, syn, config.grid);
  report.violation_rates = violation_rates(syn, config.rules);

  if (config.target) {
    const auto t = real.schema().index_of(*config.target);
    const auto& cs = real.schema()[t];
    const TaskKind task = config.task.value_or(cs.is_categorical() ? TaskKind::Classification : TaskKind::Regression);
    report.utility = utility_eval(syn, real, *config.target, task, config.utility);
    spdlog::info("utility {} {:.4f} +- {:.4f}", report.utility->metric, report.utility->mean, report.utility->stddev);
    if (task == TaskKind::Classification && cs.categories.size() == 2) {
      std::int32_t positive;
      if (config.positive) {
        auto code = cs.code_of(*config.positive);
        if (!code) throw SchemaError("positive class '" + *config.positive + "' is not a category of '" + cs.name + "'");
        positive = *code;
      } else {
        const auto freq = category_frequencies(real.codes(t), 2);
        positive = freq[1] <= freq[0] ? 1 : 0;
      }
      GbdtConfig gc = config.utility.gbdt;
      gc.seed = derive_seed(config.utility.seed, 0, 0xf0);
      const auto model = GbdtClassifier::fit(encode_features(syn, syn, {t}), syn.codes(t), 2, gc);
      const Eigen::MatrixXd proba = model.predict_proba(encode_features(real, syn, {t}));
      std::vector<std::int32_t> pred(real.n_rows());
      for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = proba(static_cast<Eigen::Index>(i), 1) > 0.5 ? 1 : 0;
      report.fnr_fpr = fnr_fpr(pred, real.codes(t), positive);
      report.positive_class = cs.categories[static_cast<std::size_t>(positive)];
    }
  }
  return report;
}

}  // namespace tabscm
