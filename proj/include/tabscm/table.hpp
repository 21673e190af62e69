#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tabscm {

enum class ColumnKind { Numerical, Categorical };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);

/// Category appended by imputation for missing categorical cells.
inline constexpr std::string_view kMissingCategory = "⟨MISSING⟩";

/// Code stored in a raw (pre-imputation) categorical cell that was missing.
inline constexpr std::int32_t kMissingCode = -1;

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numerical;
  std::vector<std::string> categories;
  bool missing_category_added = false;

  bool is_numerical() const { return kind == ColumnKind::Numerical; }
  bool is_categorical() const { return kind == ColumnKind::Categorical; }
  std::optional<std::int32_t> code_of(std::string_view category) const;

  bool operator==(const ColumnSchema&) const = default;
};

class TableSchema {
 public:
  TableSchema() = default;
  /// Throws SchemaError on duplicate column names, duplicate categories, or
  /// categories attached to a numerical column.
  explicit TableSchema(std::vector<ColumnSchema> columns);

  std::size_t size() const { return columns_.size(); }
  const ColumnSchema& operator[](std::size_t i) const { return columns_[i]; }
  const std::vector<ColumnSchema>& columns() const { return columns_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Like find(), but throws SchemaError for unknown names.
  std::size_t index_of(std::string_view name) const;
  std::vector<std::string> names() const;
  std::size_t count(ColumnKind kind) const;

  bool operator==(const TableSchema&) const = default;

 private:
  std::vector<ColumnSchema> columns_;
};

/// Storage for one column. Numerical columns use `values` (NaN = missing);
/// categorical columns use `codes` (kMissingCode = missing).
struct Column {
  std::vector<double> values;
  std::vector<std::int32_t> codes;

  static Column numerical(std::vector<double> v) { return Column{std::move(v), {}}; }
  static Column categorical(std::vector<std::int32_t> c) { return Column{{}, std::move(c)}; }

  bool operator==(const Column&) const = default;
};

/// Column-typed in-memory dataset. Immutable once constructed; every
/// transformation returns a new Table.
class Table {
 public:
  Table() = default;
  Table(TableSchema schema, std::vector<Column> columns);

  static Table empty(TableSchema schema);

  const TableSchema& schema() const { return schema_; }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return columns_.size(); }

  const Column& column(std::size_t i) const { return columns_[i]; }
  std::span<const double> numeric(std::size_t i) const;
  std::span<const std::int32_t> codes(std::size_t i) const;

  bool is_missing(std::size_t row, std::size_t col) const;
  bool has_missing() const;

  /// Cell value as a double: the raw number, or the category code.
  double value(std::size_t row, std::size_t col) const;
  /// Cell rendered as text: shortest round-trip decimal or category name.
  std::string cell_string(std::size_t row, std::size_t col) const;

  Table select_rows(std::span<const std::size_t> rows) const;
  /// Vertical concatenation; schemas must match exactly.
  Table concat(const Table& other) const;
  /// Same data under a new schema (used when imputation extends categories).
  Table with_schema(TableSchema schema) const;

  bool operator==(const Table&) const;

 private:
  TableSchema schema_;
  std::size_t n_rows_ = 0;
  std::vector<Column> columns_;
};

/// Shortest decimal text that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace tabscm
