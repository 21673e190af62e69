#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "tabscm/common.hpp"
#include "tabscm/discovery.hpp"

namespace tabscm {

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a, int terms) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);
  const auto n = a.rows();
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= std::max(terms, 20); ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

AcyclicityValue acyclicity_h(const Eigen::MatrixXd& w) {
  const Eigen::MatrixXd e = matrix_exp(w.cwiseProduct(w));
  AcyclicityValue out;
  out.value = e.trace() - static_cast<double>(w.rows());
  out.gradient = e.transpose().cwiseProduct(2.0 * w);
  return out;
}

namespace {

class Objective {
 public:
  Objective(Eigen::MatrixXd cov, double lambda1) : cov_(std::move(cov)), lambda1_(lambda1) {}

  double rho = 0.0;
  double alpha = 0.0;

  /// Smooth part and its gradient.
  double smooth(const Eigen::MatrixXd& w, Eigen::MatrixXd* grad) const {
    const auto d = w.rows();
    const Eigen::MatrixXd resid = Eigen::MatrixXd::Identity(d, d) - w;
    const Eigen::MatrixXd c_resid = cov_ * resid;
    const double loss = 0.5 * (resid.transpose() * c_resid).trace();
    const auto h = acyclicity_h(w);
    if (grad) *grad = -c_resid + (rho * h.value + alpha) * h.gradient;
    return loss + 0.5 * rho * h.value * h.value + alpha * h.value;
  }

  double total(const Eigen::MatrixXd& w) const { return smooth(w, nullptr) + lambda1_ * w.cwiseAbs().sum(); }

  double lambda1() const { return lambda1_; }

 private:
  Eigen::MatrixXd cov_;
  double lambda1_;
};

Eigen::MatrixXd prox_step(const Eigen::MatrixXd& w, const Eigen::MatrixXd& grad, double eta, double lambda1) {
  Eigen::MatrixXd out = w - eta * grad;
  const double t = eta * lambda1;
  out = out.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
  out.diagonal().setZero();
  return out;
}

}  // namespace

NotearsResult notears_fit(const Eigen::MatrixXd& x, const NotearsConfig& config, std::vector<std::string> names) {
  if (!(config.rho_init > 0.0)) throw Error("NOTEARS rho_init must be positive");
  if (!(config.h_tolerance > 0.0)) throw Error("NOTEARS h_tolerance must be positive");
  if (!(config.learning_rate > 0.0)) throw Error("NOTEARS learning_rate must be positive");
  if (config.lambda1 < 0.0 || config.w_min < 0.0) throw Error("NOTEARS lambda1 and w_min must be non-negative");
  const auto d = x.cols();
  const double n = static_cast<double>(x.rows());
  if (x.rows() == 0) throw Error("NOTEARS needs at least one row");

  Objective obj(x.transpose() * x / n, config.lambda1);
  obj.rho = config.rho_init;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
  double h = std::numeric_limits<double>::infinity();
  NotearsResult result;
  std::size_t outer = 0;
  for (; outer < config.max_outer_iterations; ++outer) {
    std::vector<double> trace;
    double current = obj.total(w);
    if (!std::isfinite(current)) throw FitError("diverged; reduce learning_rate");
    double eta = config.learning_rate;
    Eigen::MatrixXd grad;
    for (std::size_t it = 0; it < config.inner_iterations; ++it) {
      obj.smooth(w, &grad);
      bool accepted = false;
      Eigen::MatrixXd next;
      double next_value = 0.0;
      while (eta > 1e-18) {
        next = prox_step(w, grad, eta, obj.lambda1());
        next_value = obj.total(next);
        if (std::isfinite(next_value) && next_value <= current) {
          accepted = true;
          break;
        }
        eta *= 0.5;
      }
      if (!accepted) break;
      const double improvement = current - next_value;
      w = std::move(next);
      current = next_value;
      trace.push_back(current);
      // learning_rate is the initial step; accepted steps may grow up to 1.
      eta = std::min(1.0, 2.0 * eta);
      if (improvement <= 1e-14 * (1.0 + std::abs(current))) break;
    }
    if (!std::isfinite(current)) throw FitError("diverged; reduce learning_rate");
    result.last_inner_objectives = std::move(trace);

    const double h_new = acyclicity_h(w).value;
    if (h_new > 0.25 * h) obj.rho = std::min(10.0 * obj.rho, config.rho_max);
    obj.alpha += obj.rho * h_new;
    h = h_new;
    spdlog::debug("notears outer {}: h={:.3e} rho={:.1e}", outer, h, obj.rho);
    if (h < config.h_tolerance) {
      ++outer;
      break;
    }
  }

  result.weights = WeightedAdjacency(w);
  result.dag = threshold_to_dag(result.weights, config.w_min, std::move(names));
  result.h = h;
  result.rho = obj.rho;
  result.outer_iterations = outer;
  return result;
}

NotearsResult notears_discover(const Table& data, const NotearsConfig& config) {
  const auto rows = static_cast<Eigen::Index>(data.n_rows());
  const auto d = static_cast<Eigen::Index>(data.n_cols());
  Eigen::MatrixXd x(rows, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < rows; ++r)
      x(r, c) = data.value(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  x = x.rowwise() - x.colwise().mean();
  if (config.standardize) {
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sd = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(rows, 1)));
      if (sd > 0.0) x.col(c) /= sd;
    }
  }
  return notears_fit(x, config, data.schema().names());
}

}  // namespace tabscm
