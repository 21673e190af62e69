#include "tabscm/table.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "tabscm/common.hpp"

namespace tabscm {

std::string_view to_string(ColumnKind kind) {
  return kind == ColumnKind::Numerical ? "numerical" : "categorical";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "numerical") return ColumnKind::Numerical;
  if (text == "categorical") return ColumnKind::Categorical;
  throw SchemaError("unknown column kind '" + std::string(text) + "'");
}

std::optional<std::int32_t> ColumnSchema::code_of(std::string_view category) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return static_cast<std::int32_t>(i);
  }
  return std::nullopt;
}

TableSchema::TableSchema(std::vector<ColumnSchema> columns) : columns_(std::move(columns)) {
  std::set<std::string> names;
  for (const auto& c : columns_) {
    if (!names.insert(c.name).second) throw SchemaError("duplicate column name '" + c.name + "'");
    if (c.is_numerical() && !c.categories.empty()) {
      throw SchemaError("numerical column '" + c.name + "' must not list categories");
    }
    std::set<std::string> cats(c.categories.begin(), c.categories.end());
    if (cats.size() != c.categories.size()) {
      throw SchemaError("column '" + c.name + "' has duplicate categories");
    }
  }
}

std::optional<std::size_t> TableSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t TableSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw SchemaError("unknown column '" + std::string(name) + "'");
}

std::vector<std::string> TableSchema::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

std::size_t TableSchema::count(ColumnKind kind) const {
  std::size_t n = 0;
  for (const auto& c : columns_) n += c.kind == kind ? 1 : 0;
  return n;
}

Table::Table(TableSchema schema, std::vector<Column> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  if (columns_.size() != schema_.size()) {
    throw SchemaError("table has " + std::to_string(columns_.size()) + " columns but schema has " +
                      std::to_string(schema_.size()));
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const auto& cs = schema_[c];
    const std::size_t len = cs.is_numerical() ? columns_[c].values.size() : columns_[c].codes.size();
    if (c == 0) n_rows_ = len;
    if (len != n_rows_) throw SchemaError("column '" + cs.name + "' has inconsistent length");
    if (cs.is_numerical() && !columns_[c].codes.empty()) {
      throw SchemaError("numerical column '" + cs.name + "' carries category codes");
    }
    if (cs.is_categorical()) {
      if (!columns_[c].values.empty()) throw SchemaError("categorical column '" + cs.name + "' carries values");
      const auto n_cat = static_cast<std::int32_t>(cs.categories.size());
      for (auto code : columns_[c].codes) {
        if (code != kMissingCode && (code < 0 || code >= n_cat)) {
          throw SchemaError("column '" + cs.name + "' has out-of-range code " + std::to_string(code));
        }
      }
    }
  }
}

Table Table::empty(TableSchema schema) {
  std::vector<Column> cols(schema.size());
  return Table(std::move(schema), std::move(cols));
}

std::span<const double> Table::numeric(std::size_t i) const {
  if (!schema_[i].is_numerical()) throw SchemaError("column '" + schema_[i].name + "' is not numerical");
  return columns_[i].values;
}

std::span<const std::int32_t> Table::codes(std::size_t i) const {
  if (!schema_[i].is_categorical()) throw SchemaError("column '" + schema_[i].name + "' is not categorical");
  return columns_[i].codes;
}

bool Table::is_missing(std::size_t row, std::size_t col) const {
  if (schema_[col].is_numerical()) return std::isnan(columns_[col].values[row]);
  return columns_[col].codes[row] == kMissingCode;
}

bool Table::has_missing() const {
  for (std::size_t c = 0; c < n_cols(); ++c) {
    for (std::size_t r = 0; r < n_rows_; ++r) {
      if (is_missing(r, c)) return true;
    }
  }
  return false;
}

double Table::value(std::size_t row, std::size_t col) const {
  if (schema_[col].is_numerical()) return columns_[col].values[row];
  return static_cast<double>(columns_[col].codes[row]);
}

std::string Table::cell_string(std::size_t row, std::size_t col) const {
  if (is_missing(row, col)) return "";
  if (schema_[col].is_numerical()) return format_double(columns_[col].values[row]);
  return schema_[col].categories[static_cast<std::size_t>(columns_[col].codes[row])];
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> cols(n_cols());
  for (std::size_t c = 0; c < n_cols(); ++c) {
    if (schema_[c].is_numerical()) {
      cols[c].values.reserve(rows.size());
      for (auto r : rows) cols[c].values.push_back(columns_[c].values.at(r));
    } else {
      cols[c].codes.reserve(rows.size());
      for (auto r : rows) cols[c].codes.push_back(columns_[c].codes.at(r));
    }
  }
  return Table(schema_, std::move(cols));
}

Table Table::concat(const Table& other) const {
  if (!(schema_ == other.schema_)) throw SchemaError("cannot concatenate tables with different schemas");
  std::vector<Column> cols = columns_;
  for (std::size_t c = 0; c < n_cols(); ++c) {
    const auto& src = other.columns_[c];
    cols[c].values.insert(cols[c].values.end(), src.values.begin(), src.values.end());
    cols[c].codes.insert(cols[c].codes.end(), src.codes.begin(), src.codes.end());
  }
  return Table(schema_, std::move(cols));
}

Table Table::with_schema(TableSchema schema) const { return Table(std::move(schema), columns_); }

bool Table::operator==(const Table& other) const {
  if (!(schema_ == other.schema_) || n_rows_ != other.n_rows_) return false;
  for (std::size_t c = 0; c < n_cols(); ++c) {
    if (schema_[c].is_categorical()) {
      if (columns_[c].codes != other.columns_[c].codes) return false;
      continue;
    }
    const auto& a = columns_[c].values;
    const auto& b = other.columns_[c].values;
    for (std::size_t r = 0; r < n_rows_; ++r) {
      const bool both_nan = std::isnan(a[r]) && std::isnan(b[r]);
      if (!both_nan && a[r] != b[r]) return false;
    }
  }
  return true;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace tabscm
