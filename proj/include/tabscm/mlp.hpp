#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tabscm/common.hpp"

namespace tabscm {

/// Fully connected network with SiLU hidden activations and a linear output
/// layer. Batches are stored column-wise: an input batch is in x B.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Cache {
    std::vector<Matrix> pre;  // pre-activations per layer
    std::vector<Matrix> act;  // act[0] is the input
  };

  struct Gradients {
    std::vector<Matrix> w;
    std::vector<Vector> b;
  };

  Mlp() = default;

  /// sizes = {in, hidden..., out}. Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
  /// initialisation for weights and biases.
  Mlp(std::vector<std::size_t> sizes, Stream& rng) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw Error("network needs at least an input and an output layer");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const auto in = static_cast<Eigen::Index>(sizes_[l]);
      const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      Matrix w(out, in);
      Vector b(out);
      for (Eigen::Index k = 0; k < in; ++k)
        for (Eigen::Index j = 0; j < out; ++j) w(j, k) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * bound);
      for (Eigen::Index j = 0; j < out; ++j) b(j) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * bound);
      weights_.push_back(std::move(w));
      biases_.push_back(std::move(b));
    }
  }

  Mlp(std::vector<std::size_t> sizes, std::vector<Matrix> weights, std::vector<Vector> biases)
      : sizes_(std::move(sizes)), weights_(std::move(weights)), biases_(std::move(biases)) {
    if (weights_.size() + 1 != sizes_.size() || biases_.size() != weights_.size()) {
      throw Error("network layer count mismatch");
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      if (weights_[l].rows() != static_cast<Eigen::Index>(sizes_[l + 1]) ||
          weights_[l].cols() != static_cast<Eigen::Index>(sizes_[l]) ||
          biases_[l].size() != static_cast<Eigen::Index>(sizes_[l + 1])) {
        throw Error("network layer shape mismatch");
      }
    }
  }

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t n_layers() const { return weights_.size(); }
  const Matrix& weight(std::size_t l) const { return weights_[l]; }
  const Vector& bias(std::size_t l) const { return biases_[l]; }
  Matrix& weight(std::size_t l) { return weights_[l]; }
  Vector& bias(std::size_t l) { return biases_[l]; }

  static Scalar silu(Scalar x) { return x / (Scalar(1) + std::exp(-x)); }
  static Scalar silu_grad(Scalar x) {
    const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-x));
    return s * (Scalar(1) + x * (Scalar(1) - s));
  }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    Matrix a = x;
    if (cache) {
      cache->pre.clear();
      cache->act.clear();
      cache->act.push_back(x);
    }
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = weights_[l] * a;
      z.colwise() += biases_[l];
      if (l + 1 < weights_.size()) {
        a = z.unaryExpr([](Scalar v) { return silu(v); });
      } else {
        a = z;
      }
      if (cache) {
        cache->pre.push_back(std::move(z));
        cache->act.push_back(a);
      }
    }
    return a;
  }

  /// Parameter gradients of sum_columns <d_out, output>.
  Gradients backward(const Cache& cache, const Matrix& d_out) const {
    Gradients g;
    g.w.resize(weights_.size());
    g.b.resize(weights_.size());
    Matrix delta = d_out;
    for (std::size_t l = weights_.size(); l-- > 0;) {
      if (l + 1 < weights_.size()) {
        delta = delta.cwiseProduct(cache.pre[l].unaryExpr([](Scalar v) { return silu_grad(v); }));
      }
      g.w[l] = delta * cache.act[l].transpose();
      g.b[l] = delta.rowwise().sum();
      if (l > 0) delta = weights_[l].transpose() * delta;
    }
    return g;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    return n;
  }

  /// Flattened parameters: per layer, weights (column-major) then biases.
  std::vector<double> parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index i = 0; i < weights_[l].size(); ++i) out.push_back(static_cast<double>(weights_[l].data()[i]));
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) out.push_back(static_cast<double>(biases_[l].data()[i]));
    }
    return out;
  }

  void set_parameters(const std::vector<double>& p) {
    if (p.size() != parameter_count()) throw Error("parameter vector length mismatch");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index i = 0; i < weights_[l].size(); ++i) weights_[l].data()[i] = static_cast<Scalar>(p[k++]);
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l].data()[i] = static_cast<Scalar>(p[k++]);
    }
  }

  static std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (std::size_t l = 0; l < g.w.size(); ++l) {
      for (Eigen::Index i = 0; i < g.w[l].size(); ++i) out.push_back(static_cast<double>(g.w[l].data()[i]));
      for (Eigen::Index i = 0; i < g.b[l].size(); ++i) out.push_back(static_cast<double>(g.b[l].data()[i]));
    }
    return out;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    return true;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

template <typename Scalar>
class Adam {
 public:
  Adam(const Mlp<Scalar>& net, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
      mw_.push_back(Mlp<Scalar>::Matrix::Zero(net.weight(l).rows(), net.weight(l).cols()));
      vw_.push_back(mw_.back());
      mb_.push_back(Mlp<Scalar>::Vector::Zero(net.bias(l).size()));
      vb_.push_back(mb_.back());
    }
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

  void step(Mlp<Scalar>& net, const typename Mlp<Scalar>::Gradients& g) {
    ++t_;
    const auto b1 = static_cast<Scalar>(beta1_);
    const auto b2 = static_cast<Scalar>(beta2_);
    const auto c1 = static_cast<Scalar>(1.0 - std::pow(beta1_, static_cast<double>(t_)));
    const auto c2 = static_cast<Scalar>(1.0 - std::pow(beta2_, static_cast<double>(t_)));
    const auto lr = static_cast<Scalar>(lr_);
    const auto eps = static_cast<Scalar>(eps_);
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
      update(net.weight(l), mw_[l], vw_[l], g.w[l], b1, b2, c1, c2, lr, eps);
      update(net.bias(l), mb_[l], vb_[l], g.b[l], b1, b2, c1, c2, lr, eps);
    }
  }

 private:
  template <typename P, typename G>
  static void update(P& p, P& m, P& v, const G& g, Scalar b1, Scalar b2, Scalar c1, Scalar c2, Scalar lr, Scalar eps) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }

  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<typename Mlp<Scalar>::Matrix> mw_, vw_;
  std::vector<typename Mlp<Scalar>::Vector> mb_, vb_;
};

/// Sinusoidal embedding of an integer timestep: dim/2 sines then dim/2
/// cosines with frequencies exp(-ln(10000) k / (dim/2)).
std::vector<double> timestep_embedding(std::size_t t, std::size_t dim);

}  // namespace tabscm
