#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabscm/common.hpp"
#include "tabscm/preprocess.hpp"
#include "tabscm/table.hpp"

namespace tabscm {

/// h = 0.9 min(sd, IQR / 1.34) n^(-1/5), falling back to the sd when the IQR
/// is zero, floored at 1e-3.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian KDE over standardized support points; samples in raw units.
class KdeMechanism {
 public:
  struct Draw {
    std::size_t index;
    double gaussian;
  };

  KdeMechanism() = default;
  KdeMechanism(std::vector<double> support, double bandwidth, Scale scale);

  /// values in raw units; they are standardized with `scale` first.
  static KdeMechanism fit(std::span<const double> values, Scale scale = {});

  const std::vector<double>& support() const { return support_; }
  double bandwidth() const { return h_; }
  const Scale& scale() const { return scale_; }

  /// Density on the standardized scale.
  double density(double z) const;

  Draw draw_noise(Stream& rng) const { return {rng.index(support_.size()), rng.normal()}; }
  double realize(const Draw& d) const { return scale_.inverse(support_.at(d.index) + h_ * d.gaussian); }
  double sample(Stream& rng) const { return realize(draw_noise(rng)); }

  nlohmann::json to_json() const;
  static KdeMechanism from_json(const nlohmann::json& j);

 private:
  std::vector<double> support_;
  double h_ = 1e-3;
  Scale scale_;
};

/// Inverse-CDF draw from a probability vector. Never returns a zero-mass
/// category.
std::int32_t inverse_cdf(std::span<const double> probs, double u);

class CategoricalMarginal {
 public:
  CategoricalMarginal() = default;
  explicit CategoricalMarginal(std::vector<double> probs);

  static CategoricalMarginal fit(std::span<const std::int32_t> codes, std::size_t n_categories);

  const std::vector<double>& probabilities() const { return probs_; }

  std::int32_t realize(double u) const { return inverse_cdf(probs_, u); }
  std::int32_t sample(Stream& rng) const { return realize(rng.uniform()); }

  nlohmann::json to_json() const;
  static CategoricalMarginal from_json(const nlohmann::json& j);

 private:
  std::vector<double> probs_;
};

/// Encodes a node's parents: standardized scalar per numerical parent, a
/// one-hot block per categorical parent.
class ParentEncoder {
 public:
  ParentEncoder() = default;
  ParentEncoder(const TableSchema& schema, const Standardizer& standardizer, std::vector<std::size_t> parents);

  const std::vector<std::size_t>& parents() const { return parents_; }
  std::size_t width() const { return width_; }

  /// row holds one value per schema column (raw numbers, codes as doubles).
  void encode_row(const double* row, double* out) const;
  /// n x width() matrix for the training table.
  Eigen::MatrixXd encode_table(const Table& table) const;

 private:
  struct Slot {
    std::size_t column;
    bool categorical;
    std::size_t offset;
    std::size_t n_categories;
    Scale scale;
  };
  std::vector<std::size_t> parents_;
  std::vector<Slot> slots_;
  std::size_t width_ = 0;
};

}  // namespace tabscm
