#include "tabscm/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tabscm {

NoiseSchedule NoiseSchedule::build(std::size_t steps, double beta_start, double beta_end) {
  if (steps == 0) throw Error("diffusion step count must be at least 1");
  NoiseSchedule s;
  s.steps = steps;
  s.beta.assign(steps + 1, 0.0);
  s.alpha.assign(steps + 1, 1.0);
  s.alpha_bar.assign(steps + 1, 1.0);
  for (std::size_t t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    s.beta[t] = beta_start + (beta_end - beta_start) * frac;
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
  }
  return s;
}

double diffuse_forward(double x0, std::size_t t, const NoiseSchedule& schedule, double eps) {
  if (t < 1 || t > schedule.steps) throw Error("diffusion timestep out of range");
  const double ab = schedule.alpha_bar[t];
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

ForwardDraw diffuse_forward(double x0, std::size_t t, const NoiseSchedule& schedule, Stream& rng) {
  const double eps = rng.normal();
  return {diffuse_forward(x0, t, schedule, eps), eps};
}

namespace {

/// out (rows x tile, column per sample) = b + W * in, accumulated one input
/// feature at a time so every output element sees the same operation
/// sequence whatever the tile size.
void dense_tile(const Eigen::MatrixXf& w, const Eigen::VectorXf& b, const float* in, std::size_t tile, float* out,
                bool activate) {
  const auto rows = static_cast<std::size_t>(w.rows());
  const auto cols = static_cast<std::size_t>(w.cols());
  for (std::size_t r = 0; r < tile; ++r) std::copy(b.data(), b.data() + rows, out + r * rows);
  for (std::size_t k = 0; k < cols; ++k) {
    const float* wk = w.data() + k * rows;
    for (std::size_t r = 0; r < tile; ++r) {
      const float a = in[r * cols + k];
      float* o = out + r * rows;
      for (std::size_t j = 0; j < rows; ++j) o[j] += wk[j] * a;
    }
  }
  if (activate) {
    for (std::size_t i = 0; i < rows * tile; ++i) out[i] = Mlp<float>::silu(out[i]);
  }
}

constexpr std::size_t kTile = 16;

}  // namespace

DiffusionMechanism DiffusionMechanism::train(std::span<const double> targets, const Eigen::MatrixXd& parents,
                                             Scale target_scale, const DiffusionConfig& config, std::uint64_t seed) {
  const std::size_t n = targets.size();
  if (n == 0) throw FitError("diffusion training needs at least one row");
  if (static_cast<std::size_t>(parents.rows()) != n) throw FitError("parent matrix rows do not match targets");
  if (config.batch_size == 0 || config.hidden == 0 || config.hidden_layers == 0) throw FitError("invalid diffusion configuration");

  DiffusionMechanism m;
  m.schedule_ = NoiseSchedule::build(config.steps);
  m.parent_width_ = static_cast<std::size_t>(parents.cols());
  m.time_dim_ = config.time_dim;
  m.scale_ = target_scale;

  const std::size_t p = m.parent_width_;
  const std::size_t in_dim = 1 + p + config.time_dim;
  std::vector<std::size_t> sizes{in_dim};
  for (std::size_t l = 0; l < config.hidden_layers; ++l) sizes.push_back(config.hidden);
  sizes.push_back(1);
  Stream rng(seed);
  m.net_ = Mlp<float>(sizes, rng);
  Adam<float> adam(m.net_, config.learning_rate);

  std::vector<double> x0(n);
  for (std::size_t i = 0; i < n; ++i) x0[i] = target_scale.forward(targets[i]);
  const Eigen::MatrixXf pf = parents.cast<float>();
  Eigen::MatrixXf temb(static_cast<Eigen::Index>(config.time_dim), static_cast<Eigen::Index>(config.steps + 1));
  for (std::size_t t = 0; t <= config.steps; ++t) {
    auto e = timestep_embedding(t, config.time_dim);
    for (std::size_t k = 0; k < config.time_dim; ++k)
      temb(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = static_cast<float>(e[k]);
  }
  std::vector<double> sqrt_ab(config.steps + 1), sqrt_1mab(config.steps + 1);
  for (std::size_t t = 1; t <= config.steps; ++t) {
    sqrt_ab[t] = std::sqrt(m.schedule_.alpha_bar[t]);
    sqrt_1mab[t] = std::sqrt(1.0 - m.schedule_.alpha_bar[t]);
  }

  Mlp<float>::Cache cache;
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(batches * config.epochs);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto perm = shuffled_indices(n, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t bsz = std::min(config.batch_size, n - start);
      const auto cols = static_cast<Eigen::Index>(bsz);
      Eigen::MatrixXf x(static_cast<Eigen::Index>(in_dim), cols);
      Eigen::MatrixXf eps(1, cols);
      for (std::size_t b = 0; b < bsz; ++b) {
        const std::size_t i = perm[start + b];
        const std::size_t t = 1 + rng.index(config.steps);
        const double e = rng.normal();
        const auto c = static_cast<Eigen::Index>(b);
        x(0, c) = static_cast<float>(sqrt_ab[t] * x0[i] + sqrt_1mab[t] * e);
        if (p > 0) x.block(1, c, static_cast<Eigen::Index>(p), 1) = pf.row(static_cast<Eigen::Index>(i)).transpose();
        x.block(static_cast<Eigen::Index>(1 + p), c, static_cast<Eigen::Index>(config.time_dim), 1) =
            temb.col(static_cast<Eigen::Index>(t));
        eps(0, c) = static_cast<float>(e);
      }
      const Eigen::MatrixXf out = m.net_.forward(x, &cache);
      const Eigen::MatrixXf diff = out - eps;
      const double loss = static_cast<double>(diff.squaredNorm()) / static_cast<double>(bsz);
      if (!std::isfinite(loss)) throw FitError("diffusion training diverged");
      epoch_loss += loss * static_cast<double>(bsz);
      const Eigen::MatrixXf d_out = diff * (2.0f / static_cast<float>(bsz));
      // Cosine decay of the step size over the whole run.
      adam.set_learning_rate(config.learning_rate * 0.5 *
                             (1.0 + std::cos(std::numbers::pi * static_cast<double>(step++) / total_steps)));
      adam.step(m.net_, m.net_.backward(cache, d_out));
    }
    m.losses_.push_back(epoch_loss / static_cast<double>(n));
  }
  if (!m.net_.all_finite()) throw FitError("diffusion training diverged");
  m.prepare();
  return m;
}

void DiffusionMechanism::prepare() {
  const auto& w1 = net_.weight(0);
  const auto hidden = static_cast<std::size_t>(w1.rows());
  time_part_ = Eigen::MatrixXf::Zero(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(schedule_.steps + 1));
  for (std::size_t t = 1; t <= schedule_.steps; ++t) {
    auto e = timestep_embedding(t, time_dim_);
    float* o = time_part_.data() + t * hidden;
    for (std::size_t k = 0; k < time_dim_; ++k) {
      const float* wk = w1.data() + (1 + parent_width_ + k) * hidden;
      const auto a = static_cast<float>(e[k]);
      for (std::size_t j = 0; j < hidden; ++j) o[j] += wk[j] * a;
    }
  }
}

void DiffusionMechanism::draw_noise(Stream& rng, double* out) const {
  for (std::size_t i = 0; i < schedule_.steps; ++i) out[i] = rng.normal();
}

void DiffusionMechanism::realize(const double* parents, const double* noise, std::size_t rows, double* out) const {
  const auto& w1 = net_.weight(0);
  const auto hidden = static_cast<std::size_t>(w1.rows());
  const std::size_t p = parent_width_;
  const std::size_t steps = schedule_.steps;
  const float* wx = w1.data();
  const bool linear = net_.n_layers() == 1;

  std::vector<float> row_part(hidden * kTile);
  std::vector<float> a(hidden * kTile), b(hidden * kTile);
  std::vector<double> x(kTile);
  std::vector<float> eps(kTile);

  for (std::size_t start = 0; start < rows; start += kTile) {
    const std::size_t tile = std::min(kTile, rows - start);
    for (std::size_t r = 0; r < tile; ++r) {
      float* o = row_part.data() + r * hidden;
      std::copy(net_.bias(0).data(), net_.bias(0).data() + hidden, o);
      const double* pr = parents + (start + r) * p;
      for (std::size_t k = 0; k < p; ++k) {
        const float* wk = w1.data() + (1 + k) * hidden;
        const auto v = static_cast<float>(pr[k]);
        for (std::size_t j = 0; j < hidden; ++j) o[j] += wk[j] * v;
      }
      x[r] = noise[(start + r) * steps];
    }
    for (std::size_t t = steps; t >= 1; --t) {
      const float* tp = time_part_.data() + t * hidden;
      for (std::size_t r = 0; r < tile; ++r) {
        const float* rp = row_part.data() + r * hidden;
        float* o = a.data() + r * hidden;
        const auto xf = static_cast<float>(x[r]);
        for (std::size_t j = 0; j < hidden; ++j) {
          float v = rp[j] + tp[j];
          v += wx[j] * xf;
          o[j] = linear ? v : Mlp<float>::silu(v);
        }
      }
      if (linear) std::copy(a.data(), a.data() + tile, eps.data());
      float* cur = a.data();
      float* nxt = b.data();
      for (std::size_t l = 1; l < net_.n_layers(); ++l) {
        const bool last = l + 1 == net_.n_layers();
        dense_tile(net_.weight(l), net_.bias(l), cur, tile, last ? eps.data() : nxt, !last);
        std::swap(cur, nxt);
      }
      const double beta = schedule_.beta[t];
      const double coef = beta / std::sqrt(1.0 - schedule_.alpha_bar[t]);
      const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule_.alpha[t]);
      const double sigma = std::sqrt(beta);
      for (std::size_t r = 0; r < tile; ++r) {
        double next = inv_sqrt_alpha * (x[r] - coef * static_cast<double>(eps[r]));
        if (t > 1) next += sigma * noise[(start + r) * steps + (steps - t + 1)];
        x[r] = next;
      }
    }
    for (std::size_t r = 0; r < tile; ++r) out[start + r] = scale_.inverse(x[r]);
  }
}

double DiffusionMechanism::realize_one(const double* parents, const double* noise) const {
  double out = 0.0;
  realize(parents, noise, 1, &out);
  return out;
}

double DiffusionMechanism::predict_noise(double x_t, const double* parents, std::size_t t) const {
  Eigen::MatrixXf in(static_cast<Eigen::Index>(1 + parent_width_ + time_dim_), 1);
  in(0, 0) = static_cast<float>(x_t);
  for (std::size_t k = 0; k < parent_width_; ++k) in(static_cast<Eigen::Index>(1 + k), 0) = static_cast<float>(parents[k]);
  auto e = timestep_embedding(t, time_dim_);
  for (std::size_t k = 0; k < time_dim_; ++k)
    in(static_cast<Eigen::Index>(1 + parent_width_ + k), 0) = static_cast<float>(e[k]);
  return static_cast<double>(net_.forward(in)(0, 0));
}

nlohmann::json DiffusionMechanism::to_json() const {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < net_.n_layers(); ++l) {
    const auto& w = net_.weight(l);
    std::vector<double> wd(w.data(), w.data() + w.size());
    const auto& b = net_.bias(l);
    std::vector<double> bd(b.data(), b.data() + b.size());
    weights.push_back(encode_doubles(wd));
    biases.push_back(encode_doubles(bd));
  }
  return {{"kind", "diffusion"},
          {"steps", schedule_.steps},
          {"parent_width", parent_width_},
          {"time_dim", time_dim_},
          {"layer_sizes", net_.sizes()},
          {"target_scale", {{"mean", scale_.mean}, {"scale", scale_.scale}}},
          {"epoch_losses", losses_},
          {"weights", weights},
          {"biases", biases}};
}

DiffusionMechanism DiffusionMechanism::from_json(const nlohmann::json& j) {
  DiffusionMechanism m;
  m.schedule_ = NoiseSchedule::build(j.at("steps").get<std::size_t>());
  m.parent_width_ = j.at("parent_width").get<std::size_t>();
  m.time_dim_ = j.at("time_dim").get<std::size_t>();
  m.scale_.mean = j.at("target_scale").at("mean").get<double>();
  m.scale_.scale = j.at("target_scale").at("scale").get<double>();
  m.losses_ = j.at("epoch_losses").get<std::vector<double>>();
  auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  if (sizes.size() < 2 || sizes.front() != 1 + m.parent_width_ + m.time_dim_ || sizes.back() != 1) {
    throw FormatError("diffusion network layout does not match its parent encoding");
  }
  std::vector<Eigen::MatrixXf> ws;
  std::vector<Eigen::VectorXf> bs;
  const auto& jw = j.at("weights");
  const auto& jb = j.at("biases");
  if (jw.size() + 1 != sizes.size() || jb.size() + 1 != sizes.size()) throw FormatError("diffusion layer count mismatch");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    auto wd = decode_doubles(jw[l].get<std::string>());
    auto bd = decode_doubles(jb[l].get<std::string>());
    const auto rows = static_cast<Eigen::Index>(sizes[l + 1]);
    const auto cols = static_cast<Eigen::Index>(sizes[l]);
    if (wd.size() != sizes[l + 1] * sizes[l] || bd.size() != sizes[l + 1]) throw FormatError("diffusion weight size mismatch");
    Eigen::MatrixXf w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<float>(wd[static_cast<std::size_t>(i)]);
    Eigen::VectorXf b(rows);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = static_cast<float>(bd[static_cast<std::size_t>(i)]);
    ws.push_back(std::move(w));
    bs.push_back(std::move(b));
  }
  m.net_ = Mlp<float>(sizes, std::move(ws), std::move(bs));
  m.prepare();
  return m;
}

}  // namespace tabscm
