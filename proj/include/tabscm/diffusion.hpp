#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tabscm/common.hpp"
#include "tabscm/mlp.hpp"
#include "tabscm/preprocess.hpp"

namespace tabscm {

/// Linear beta schedule; index t runs 1..T (slot 0 is unused).
struct NoiseSchedule {
  std::size_t steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  /// beta from 1e-4 to 0.02 inclusive. Throws for T = 0.
  static NoiseSchedule build(std::size_t steps, double beta_start = 1e-4, double beta_end = 0.02);
};

struct ForwardDraw {
  double x_t;
  double eps;
};

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps with eps ~ N(0, 1).
ForwardDraw diffuse_forward(double x0, std::size_t t, const NoiseSchedule& schedule, Stream& rng);
double diffuse_forward(double x0, std::size_t t, const NoiseSchedule& schedule, double eps);

struct DiffusionConfig {
  std::size_t epochs = 500;
  std::size_t steps = 500;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::size_t hidden = 128;
  std::size_t hidden_layers = 2;
  std::size_t time_dim = 32;
};

/// Conditional DDPM for one continuous node. Targets are modelled on the
/// standardized scale; realize() returns raw units.
class DiffusionMechanism {
 public:
  DiffusionMechanism() = default;

  /// targets: raw values; parents: n x p encoded parent matrix.
  static DiffusionMechanism train(std::span<const double> targets, const Eigen::MatrixXd& parents, Scale target_scale,
                                  const DiffusionConfig& config, std::uint64_t seed);

  const NoiseSchedule& schedule() const { return schedule_; }
  const Mlp<float>& network() const { return net_; }
  std::size_t parent_width() const { return parent_width_; }
  std::size_t time_dim() const { return time_dim_; }
  const Scale& target_scale() const { return scale_; }
  const std::vector<double>& epoch_losses() const { return losses_; }
  double final_loss() const { return losses_.empty() ? 0.0 : losses_.back(); }

  /// Exogenous draws of one sample: x_T followed by z_T, ..., z_2.
  std::size_t noise_size() const { return schedule_.steps; }
  void draw_noise(Stream& rng, double* out) const;

  /// Reverse process for `rows` rows. parents is row-major rows x p,
  /// noise is row-major rows x noise_size(). Each row's result depends only
  /// on its own inputs, so a batch of one reproduces a batch of many.
  void realize(const double* parents, const double* noise, std::size_t rows, double* out) const;
  double realize_one(const double* parents, const double* noise) const;

  /// Network output for one input on the standardized scale.
  double predict_noise(double x_t, const double* parents, std::size_t t) const;

  nlohmann::json to_json() const;
  static DiffusionMechanism from_json(const nlohmann::json& j);

 private:
  void prepare();

  NoiseSchedule schedule_;
  Mlp<float> net_;
  std::size_t parent_width_ = 0;
  std::size_t time_dim_ = 32;
  Scale scale_;
  std::vector<double> losses_;
  // Timestep part of the first layer, one column per t (slot 0 unused).
  Eigen::MatrixXf time_part_;
};

}  // namespace tabscm
