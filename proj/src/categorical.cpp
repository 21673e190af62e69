#include <algorithm>
#include <cmath>

#include "tabscm/mechanisms.hpp"

namespace tabscm {

std::int32_t inverse_cdf(std::span<const double> probs, double u) {
  double cum = 0.0;
  std::int32_t last = -1;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (probs[c] <= 0.0) continue;
    cum += probs[c];
    last = static_cast<std::int32_t>(c);
    if (u < cum) return last;
  }
  if (last < 0) throw Error("probability vector has no mass");
  return last;
}

CategoricalMarginal::CategoricalMarginal(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw FitError("categorical marginal needs at least one category");
  double s = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw FitError("negative category probability");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw FitError("category probabilities do not sum to 1");
}

CategoricalMarginal CategoricalMarginal::fit(std::span<const std::int32_t> codes, std::size_t n_categories) {
  if (n_categories == 0) throw FitError("categorical marginal needs at least one category");
  if (codes.empty()) throw FitError("categorical marginal needs at least one row");
  std::vector<std::size_t> counts(n_categories, 0);
  for (auto c : codes) {
    if (c < 0 || static_cast<std::size_t>(c) >= n_categories) throw FitError("category code out of range");
    ++counts[static_cast<std::size_t>(c)];
  }
  std::vector<double> probs(n_categories);
  for (std::size_t c = 0; c < n_categories; ++c) {
    probs[c] = static_cast<double>(counts[c]) / static_cast<double>(codes.size());
  }
  return CategoricalMarginal(std::move(probs));
}

nlohmann::json CategoricalMarginal::to_json() const { return {{"kind", "cat_marginal"}, {"probabilities", probs_}}; }

CategoricalMarginal CategoricalMarginal::from_json(const nlohmann::json& j) {
  return CategoricalMarginal(j.at("probabilities").get<std::vector<double>>());
}

ParentEncoder::ParentEncoder(const TableSchema& schema, const Standardizer& standardizer,
                             std::vector<std::size_t> parents)
    : parents_(std::move(parents)) {
  for (auto c : parents_) {
    Slot s{c, schema[c].is_categorical(), width_, 0, {}};
    if (s.categorical) {
      s.n_categories = schema[c].categories.size();
      width_ += s.n_categories;
    } else {
      s.scale = standardizer.scale(c);
      width_ += 1;
    }
    slots_.push_back(s);
  }
}

void ParentEncoder::encode_row(const double* row, double* out) const {
  std::fill(out, out + width_, 0.0);
  for (const auto& s : slots_) {
    const double v = row[s.column];
    if (s.categorical) {
      const auto code = static_cast<std::size_t>(v);
      if (code < s.n_categories) out[s.offset + code] = 1.0;
    } else {
      out[s.offset] = s.scale.forward(v);
    }
  }
}

Eigen::MatrixXd ParentEncoder::encode_table(const Table& table) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.n_rows()), static_cast<Eigen::Index>(width_));
  std::vector<double> row(table.n_cols()), out(width_);
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (auto c : parents_) row[c] = table.value(r, c);
    encode_row(row.data(), out.data());
    for (std::size_t k = 0; k < width_; ++k) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = out[k];
  }
  return m;
}

}  // namespace tabscm
