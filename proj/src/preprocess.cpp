#include "tabscm/preprocess.hpp"

#include <cmath>

#include "tabscm/common.hpp"

namespace tabscm {

Table impute_missing(const Table& table) {
  const auto& schema = table.schema();
  std::vector<ColumnSchema> cols = schema.columns();
  std::vector<Column> data(table.n_cols());
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    data[c] = table.column(c);
    if (cols[c].is_numerical()) {
      auto& v = data[c].values;
      double sum = 0.0;
      std::size_t observed = 0;
      for (double x : v) {
        if (!std::isnan(x)) {
          sum += x;
          ++observed;
        }
      }
      if (observed == v.size()) continue;
      if (observed == 0) throw SchemaError("column '" + cols[c].name + "' has no observed values; mean undefined");
      const double m = sum / static_cast<double>(observed);
      for (double& x : v) {
        if (std::isnan(x)) x = m;
      }
    } else {
      auto& codes = data[c].codes;
      bool any_missing = false;
      for (auto code : codes) any_missing |= code == kMissingCode;
      if (!any_missing) continue;
      std::int32_t sentinel = 0;
      if (auto existing = cols[c].code_of(kMissingCategory)) {
        sentinel = *existing;
      } else {
        sentinel = static_cast<std::int32_t>(cols[c].categories.size());
        cols[c].categories.emplace_back(kMissingCategory);
        cols[c].missing_category_added = true;
      }
      for (auto& code : codes) {
        if (code == kMissingCode) code = sentinel;
      }
    }
  }
  return Table(TableSchema(std::move(cols)), std::move(data));
}

Standardizer Standardizer::fit(const Table& table) {
  std::vector<Scale> scales(table.n_cols());
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (!table.schema()[c].is_numerical()) continue;
    auto v = table.numeric(c);
    Scale s;
    s.mean = mean(v);
    s.scale = population_sd(v);
    if (!(s.scale > 0.0) || !std::isfinite(s.scale)) s.scale = 1.0;
    scales[c] = s;
  }
  return Standardizer(std::move(scales));
}

Table Standardizer::apply(const Table& table) const {
  std::vector<Column> cols(table.n_cols());
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    cols[c] = table.column(c);
    if (!table.schema()[c].is_numerical()) continue;
    for (double& x : cols[c].values) x = scales_.at(c).forward(x);
  }
  return Table(table.schema(), std::move(cols));
}

Table Standardizer::invert(const Table& table) const {
  std::vector<Column> cols(table.n_cols());
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    cols[c] = table.column(c);
    if (!table.schema()[c].is_numerical()) continue;
    for (double& x : cols[c].values) x = scales_.at(c).inverse(x);
  }
  return Table(table.schema(), std::move(cols));
}

Eigen::MatrixXd Standardizer::encode(const Table& table) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.n_rows()), static_cast<Eigen::Index>(table.n_cols()));
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    const bool numeric = table.schema()[c].is_numerical();
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
      const double v = table.value(r, c);
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = numeric ? scales_.at(c).forward(v) : v;
    }
  }
  return m;
}

Table Standardizer::decode(const Eigen::MatrixXd& matrix, const TableSchema& schema) const {
  if (static_cast<std::size_t>(matrix.cols()) != schema.size()) throw SchemaError("matrix width does not match schema");
  std::vector<Column> cols(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
      const double v = matrix(r, static_cast<Eigen::Index>(c));
      if (schema[c].is_numerical()) {
        cols[c].values.push_back(scales_.at(c).inverse(v));
      } else {
        cols[c].codes.push_back(static_cast<std::int32_t>(std::lround(v)));
      }
    }
  }
  return Table(schema, std::move(cols));
}

LabelCodec::LabelCodec(const TableSchema& schema) : to_code_(schema.size()), to_name_(schema.size()) {
  for (std::size_t c = 0; c < schema.size(); ++c) {
    to_name_[c] = schema[c].categories;
    for (std::size_t k = 0; k < schema[c].categories.size(); ++k) {
      to_code_[c].emplace(schema[c].categories[k], static_cast<std::int32_t>(k));
    }
  }
}

std::int32_t LabelCodec::encode(std::size_t column, std::string_view category) const {
  const auto& m = to_code_.at(column);
  auto it = m.find(category);
  if (it == m.end()) throw SchemaError("unknown category '" + std::string(category) + "'");
  return it->second;
}

const std::string& LabelCodec::decode(std::size_t column, std::int32_t code) const {
  const auto& names = to_name_.at(column);
  if (code < 0 || static_cast<std::size_t>(code) >= names.size()) {
    throw SchemaError("category code " + std::to_string(code) + " out of range");
  }
  return names[static_cast<std::size_t>(code)];
}

TableSplit split(const Table& table, SplitFractions f, std::uint64_t seed) {
  if (table.n_rows() < 3) throw Error("split needs at least 3 rows");
  if (!(f.train > 0 && f.val > 0 && f.test > 0) || std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw Error("split fractions must be positive and sum to 1");
  }
  const std::size_t n = table.n_rows();
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.test + 1e-9));
  const std::size_t n_train = n - n_val - n_test;

  Stream stream(seed);
  auto perm = shuffled_indices(n, stream);
  std::span<const std::size_t> all(perm);
  return TableSplit{table.select_rows(all.subspan(0, n_train)), table.select_rows(all.subspan(n_train, n_val)),
                    table.select_rows(all.subspan(n_train + n_val, n_test))};
}

}  // namespace tabscm
