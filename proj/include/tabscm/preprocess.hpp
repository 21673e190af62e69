#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tabscm/table.hpp"

namespace tabscm {

/// Numerical missing cells become the column mean; categorical missing cells
/// become the ⟨MISSING⟩ category, appended to the schema on first use.
/// Throws SchemaError when a numerical column has no observed value.
Table impute_missing(const Table& table);

/// Affine map z = (x - mean) / scale.
struct Scale {
  double mean = 0.0;
  double scale = 1.0;

  double forward(double x) const { return (x - mean) / scale; }
  double inverse(double z) const { return z * scale + mean; }

  bool operator==(const Scale&) const = default;
};

/// Per-column z-scoring with the population standard deviation. Constant
/// columns get scale 1 and therefore map to all zeros.
class Standardizer {
 public:
  Standardizer() = default;
  explicit Standardizer(std::vector<Scale> scales) : scales_(std::move(scales)) {}

  static Standardizer fit(const Table& table);

  /// Identity for categorical columns.
  const Scale& scale(std::size_t column) const { return scales_.at(column); }
  const std::vector<Scale>& scales() const { return scales_; }

  Table apply(const Table& table) const;
  Table invert(const Table& table) const;

  /// Dense matrix view: standardized numerics, categorical codes as reals.
  Eigen::MatrixXd encode(const Table& table) const;
  /// Inverse of encode(); categorical cells are rounded back to codes.
  Table decode(const Eigen::MatrixXd& matrix, const TableSchema& schema) const;

  bool operator==(const Standardizer&) const = default;

 private:
  std::vector<Scale> scales_;
};

/// Bijection between category strings and integer codes, per column.
class LabelCodec {
 public:
  LabelCodec() = default;
  explicit LabelCodec(const TableSchema& schema);

  /// Throws SchemaError for unknown categories or numerical columns.
  std::int32_t encode(std::size_t column, std::string_view category) const;
  const std::string& decode(std::size_t column, std::int32_t code) const;

 private:
  std::vector<std::map<std::string, std::int32_t, std::less<>>> to_code_;
  std::vector<std::vector<std::string>> to_name_;
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct TableSplit {
  Table train;
  Table val;
  Table test;
};

/// Seeded shuffle, then floor allocations for val/test with the remainder
/// going to train.
TableSplit split(const Table& table, SplitFractions fractions, std::uint64_t seed);

}  // namespace tabscm
