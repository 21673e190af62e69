#include <algorithm>
#include <cmath>
#include <numbers>

#include "tabscm/mechanisms.hpp"

namespace tabscm {

double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 1e-3;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double m = 0.0;
  for (double v : sorted) m += v;
  m /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : sorted) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  return std::max(h, 1e-3);
}

KdeMechanism::KdeMechanism(std::vector<double> support, double bandwidth, Scale scale)
    : support_(std::move(support)), h_(bandwidth), scale_(scale) {
  if (support_.empty()) throw FitError("KDE needs at least one support point");
  if (!(h_ > 0.0)) throw FitError("KDE bandwidth must be positive");
}

KdeMechanism KdeMechanism::fit(std::span<const double> values, Scale scale) {
  std::vector<double> z(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) z[i] = scale.forward(values[i]);
  const double h = silverman_bandwidth(z);
  return KdeMechanism(std::move(z), h, scale);
}

double KdeMechanism::density(double z) const {
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * h_ * static_cast<double>(support_.size()));
  double s = 0.0;
  for (double x : support_) {
    const double u = (z - x) / h_;
    s += std::exp(-0.5 * u * u);
  }
  return s * norm;
}

nlohmann::json KdeMechanism::to_json() const {
  return {{"kind", "kde"},
          {"bandwidth", h_},
          {"scale", {{"mean", scale_.mean}, {"scale", scale_.scale}}},
          {"support", encode_doubles(support_)}};
}

KdeMechanism KdeMechanism::from_json(const nlohmann::json& j) {
  Scale s{j.at("scale").at("mean").get<double>(), j.at("scale").at("scale").get<double>()};
  return KdeMechanism(decode_doubles(j.at("support").get<std::string>()), j.at("bandwidth").get<double>(), s);
}

}  // namespace tabscm
