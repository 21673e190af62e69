#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <boost/math/special_functions/gamma.hpp>
#include <spdlog/spdlog.h>

#include "tabscm/common.hpp"
#include "tabscm/discovery.hpp"

namespace tabscm {

namespace {

std::atomic<bool> g_singular_warned{false};
std::atomic<bool> g_degenerate_warned{false};

}  // namespace

std::string_view to_string(CiTestKind kind) { return kind == CiTestKind::FisherZ ? "fisherz" : "chisq"; }

CiTestKind parse_ci_test(std::string_view text) {
  if (text == "fisherz" || text == "fisher_z") return CiTestKind::FisherZ;
  if (text == "chisq" || text == "chi_square") return CiTestKind::ChiSquare;
  throw ParseError("unknown CI test '" + std::string(text) + "' (expected fisherz or chisq)");
}

std::vector<std::int32_t> equal_frequency_bins(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw Error("bin count must be positive");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (std::size_t k = 1; k < bins && !sorted.empty(); ++k) {
    edges.push_back(sorted_quantile(sorted, static_cast<double>(k) / static_cast<double>(bins)));
  }
  std::vector<std::int32_t> out(values.size());
  for (std::size_t r = 0; r < values.size(); ++r) {
    out[r] = static_cast<std::int32_t>(std::lower_bound(edges.begin(), edges.end(), values[r]) - edges.begin());
  }
  return out;
}

CiTester::CiTester(const Table& data, CiTestKind configured, std::size_t bins)
    : n_(data.n_rows()), configured_(configured) {
  const std::size_t d = data.n_cols();
  const auto rows = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(d));
  for (std::size_t c = 0; c < d; ++c) {
    kinds_.push_back(data.schema()[c].kind);
    for (std::size_t r = 0; r < n_; ++r) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data.value(r, c);
    if (data.schema()[c].is_numerical()) {
      levels_.push_back(equal_frequency_bins(data.numeric(c), bins));
      n_levels_.push_back(static_cast<std::int32_t>(bins));
    } else {
      auto codes = data.codes(c);
      levels_.emplace_back(codes.begin(), codes.end());
      n_levels_.push_back(static_cast<std::int32_t>(data.schema()[c].categories.size()));
    }
  }
  Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered;
  corr_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index a = 0; a < cov.rows(); ++a) {
    for (Eigen::Index b = 0; b < a; ++b) {
      const double denom = std::sqrt(cov(a, a) * cov(b, b));
      const double r = denom > 0.0 ? cov(a, b) / denom : 0.0;
      corr_(a, b) = corr_(b, a) = std::clamp(r, -1.0, 1.0);
    }
  }
}

CiResult CiTester::test(std::size_t i, std::size_t j, const std::vector<std::size_t>& s, double alpha) const {
  bool categorical = kinds_[i] == ColumnKind::Categorical || kinds_[j] == ColumnKind::Categorical;
  for (auto k : s) categorical |= kinds_[k] == ColumnKind::Categorical;
  if (categorical || configured_ == CiTestKind::ChiSquare) return chi_square(i, j, s, alpha);
  return fisher_z(i, j, s, alpha);
}

CiResult CiTester::fisher_z(std::size_t i, std::size_t j, const std::vector<std::size_t>& s, double alpha) const {
  if (j < i) std::swap(i, j);
  if (n_ <= s.size() + 3) throw Error("Fisher-z test needs more than |S| + 3 rows");
  double r = 0.0;
  if (s.empty()) {
    r = corr_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  } else {
    std::vector<std::size_t> idx{i, j};
    idx.insert(idx.end(), s.begin(), s.end());
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        sub(a, b) = corr_(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]),
                          static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub);
    if (eig.eigenvalues().minCoeff() < 1e-10) {
      if (!g_singular_warned.exchange(true)) {
        spdlog::warn("singular correlation submatrix in Fisher-z test; treating pair as dependent");
      }
      return {false, 0.0, std::numeric_limits<double>::infinity()};
    }
    Eigen::MatrixXd prec = sub.inverse();
    r = -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
  }
  if (std::abs(r) >= 1.0) return {false, 0.0, std::numeric_limits<double>::infinity()};
  const double z = 0.5 * std::log((1.0 + r) / (1.0 - r));
  const double stat = std::sqrt(static_cast<double>(n_ - s.size() - 3)) * std::abs(z);
  const double p = std::erfc(stat / std::sqrt(2.0));
  return {p > alpha, p, stat};
}

CiResult CiTester::chi_square(std::size_t i, std::size_t j, const std::vector<std::size_t>& s, double alpha) const {
  if (j < i) std::swap(i, j);
  const auto li = static_cast<std::size_t>(n_levels_[i]);
  const auto lj = static_cast<std::size_t>(n_levels_[j]);
  const std::size_t cells = li * lj;

  std::unordered_map<std::uint64_t, std::size_t> stratum_of;
  std::vector<std::size_t> row_stratum(n_);
  for (std::size_t r = 0; r < n_; ++r) {
    std::uint64_t key = 0;
    for (auto k : s) key = key * static_cast<std::uint64_t>(n_levels_[k]) + static_cast<std::uint64_t>(levels_[k][r]);
    row_stratum[r] = stratum_of.emplace(key, stratum_of.size()).first->second;
  }
  std::vector<double> counts(stratum_of.size() * cells, 0.0);
  for (std::size_t r = 0; r < n_; ++r) {
    counts[row_stratum[r] * cells + static_cast<std::size_t>(levels_[i][r]) * lj + static_cast<std::size_t>(levels_[j][r])] += 1.0;
  }

  double stat = 0.0;
  double dof = 0.0;
  std::vector<double> row_m(li), col_m(lj);
  for (std::size_t st = 0; st < stratum_of.size(); ++st) {
    const double* t = &counts[st * cells];
    std::fill(row_m.begin(), row_m.end(), 0.0);
    std::fill(col_m.begin(), col_m.end(), 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < li; ++a)
      for (std::size_t b = 0; b < lj; ++b) {
        row_m[a] += t[a * lj + b];
        col_m[b] += t[a * lj + b];
        total += t[a * lj + b];
      }
    const auto nz_rows = std::count_if(row_m.begin(), row_m.end(), [](double v) { return v > 0.0; });
    const auto nz_cols = std::count_if(col_m.begin(), col_m.end(), [](double v) { return v > 0.0; });
    if (nz_rows < 2 || nz_cols < 2) continue;
    dof += static_cast<double>((nz_rows - 1) * (nz_cols - 1));
    for (std::size_t a = 0; a < li; ++a) {
      if (row_m[a] == 0.0) continue;
      for (std::size_t b = 0; b < lj; ++b) {
        if (col_m[b] == 0.0) continue;
        const double e = row_m[a] * col_m[b] / total;
        const double diff = t[a * lj + b] - e;
        stat += diff * diff / e;
      }
    }
  }
  if (dof == 0.0) {
    if (!g_degenerate_warned.exchange(true)) {
      spdlog::warn("all strata degenerate in chi-square test; treating pair as independent");
    }
    return {true, 1.0, 0.0};
  }
  const double p = boost::math::gamma_q(dof / 2.0, stat / 2.0);
  return {p > alpha, p, stat};
}

CiResult fisher_z_test(const Table& data, std::size_t i, std::size_t j, const std::vector<std::size_t>& s,
                       double alpha) {
  return CiTester(data, CiTestKind::FisherZ).fisher_z(i, j, s, alpha);
}

CiResult chi_square_test(const Table& data, std::size_t i, std::size_t j, const std::vector<std::size_t>& s,
                         double alpha, std::size_t bins) {
  return CiTester(data, CiTestKind::ChiSquare, bins).chi_square(i, j, s, alpha);
}

}  // namespace tabscm
