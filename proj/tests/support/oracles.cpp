#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "tabscm/common.hpp"
#include "tabscm/preprocess.hpp"

namespace tabscm::testing {

double ks_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double best = 0.0;
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double t : pooled) {
    const auto ca = std::count_if(a.begin(), a.end(), [t](double v) { return v <= t; });
    const auto cb = std::count_if(b.begin(), b.end(), [t](double v) { return v <= t; });
    best = std::max(best, std::abs(static_cast<double>(ca) / static_cast<double>(a.size()) -
                                   static_cast<double>(cb) / static_cast<double>(b.size())));
  }
  return best;
}

double tv_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < std::max(p.size(), q.size()); ++i) {
    const double d = (i < p.size() ? p[i] : 0.0) - (i < q.size() ? q[i] : 0.0);
    if (d > 0) s += d;
  }
  return s;
}

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double auc_oracle(const std::vector<double>& scores, const std::vector<std::int32_t>& labels) {
  double num = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[i] != 1 || labels[j] != 0) continue;
      pairs += 1;
      num += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
    }
  }
  return num / pairs;
}

std::vector<double> dcr_oracle(const Table& real, const Table& syn) {
  const auto st = Standardizer::fit(real);
  std::vector<double> out;
  for (std::size_t s = 0; s < syn.n_rows(); ++s) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < real.n_rows(); ++r) {
      double dist = 0.0;
      for (std::size_t c = 0; c < real.n_cols(); ++c) {
        if (real.schema()[c].is_categorical()) {
          dist += syn.codes(c)[s] != real.codes(c)[r] ? 1.0 : 0.0;
        } else {
          dist += std::abs(st.scale(c).forward(syn.numeric(c)[s]) - st.scale(c).forward(real.numeric(c)[r]));
        }
      }
      best = std::min(best, dist);
    }
    out.push_back(best);
  }
  return out;
}

namespace {

/// Bin = number of distinct quantile cut points at or below x.
std::vector<int> quantile_bins(const std::vector<double>& ref, const std::vector<double>& xs, int bins) {
  std::vector<double> s = ref;
  std::sort(s.begin(), s.end());
  std::vector<double> cuts;
  for (int k = 1; k < bins; ++k) {
    const double pos = static_cast<double>(k) / bins * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    cuts.push_back(lo + 1 < s.size() ? s[lo] + frac * (s[lo + 1] - s[lo]) : s[lo]);
  }
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<int> out;
  for (double x : xs) {
    out.push_back(static_cast<int>(std::count_if(cuts.begin(), cuts.end(), [x](double c) { return c <= x; })));
  }
  return out;
}

double joint_tv(const std::vector<int>& a1, const std::vector<int>& b1, const std::vector<int>& a2,
                const std::vector<int>& b2) {
  std::map<std::pair<int, int>, double> p, q;
  for (std::size_t i = 0; i < a1.size(); ++i) p[{a1[i], b1[i]}] += 1.0;
  for (std::size_t i = 0; i < a2.size(); ++i) q[{a2[i], b2[i]}] += 1.0;
  double tv = 0.0;
  for (auto& [k, v] : p) {
    const auto it = q.find(k);
    tv += std::abs(v / static_cast<double>(a1.size()) - (it == q.end() ? 0.0 : it->second / static_cast<double>(a2.size())));
  }
  for (auto& [k, v] : q) {
    if (!p.count(k)) tv += v / static_cast<double>(a2.size());
  }
  return 0.5 * tv;
}

std::vector<double> as_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

double corr_error_oracle(const Table& real, const Table& syn, int bins) {
  const auto& schema = real.schema();
  const std::size_t d = schema.size();
  std::vector<std::vector<int>> rd(d), sd(d);
  for (std::size_t c = 0; c < d; ++c) {
    if (schema[c].is_categorical()) {
      rd[c].assign(real.codes(c).begin(), real.codes(c).end());
      sd[c].assign(syn.codes(c).begin(), syn.codes(c).end());
    } else {
      const auto ref = as_vector(real.numeric(c));
      rd[c] = quantile_bins(ref, ref, bins);
      sd[c] = quantile_bins(ref, as_vector(syn.numeric(c)), bins);
    }
  }
  double num = 0.0, cat = 0.0;
  int n_num = 0, n_cat = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (schema[i].is_numerical() && schema[j].is_numerical()) {
        num += std::abs(pearson_oracle(as_vector(real.numeric(i)), as_vector(real.numeric(j))) -
                        pearson_oracle(as_vector(syn.numeric(i)), as_vector(syn.numeric(j))));
        ++n_num;
      } else {
        cat += joint_tv(rd[i], rd[j], sd[i], sd[j]);
        ++n_cat;
      }
    }
  }
  if (n_num && n_cat) return 0.5 * (num / n_num + cat / n_cat);
  return n_num ? num / n_num : cat / n_cat;
}

Table shuffle_columns(const Table& t, std::uint64_t seed) {
  std::vector<Column> cols;
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    Stream rng(seed, c, 0);
    const auto perm = shuffled_indices(t.n_rows(), rng);
    Column col;
    for (auto r : perm) {
      if (t.schema()[c].is_numerical()) {
        col.values.push_back(t.numeric(c)[r]);
      } else {
        col.codes.push_back(t.codes(c)[r]);
      }
    }
    cols.push_back(std::move(col));
  }
  return Table(t.schema(), std::move(cols));
}

}  // namespace tabscm::testing
