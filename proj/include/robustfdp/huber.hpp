#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "robustfdp/errors.hpp"

namespace robustfdp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Huber loss: quadratic inside the bandwidth, linear outside.
inline double huber_loss(double u, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("huber_loss: tau must be positive");
  if (!std::isfinite(u)) throw std::invalid_argument("huber_loss: non-finite argument");
  const double a = std::abs(u);
  return a <= tau ? 0.5 * u * u : tau * a - 0.5 * tau * tau;
}

/// Derivative of the Huber loss: the argument clipped to [-tau, tau].
inline double huber_score(double u, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("huber_score: tau must be positive");
  if (!std::isfinite(u)) throw std::invalid_argument("huber_score: non-finite argument");
  return std::clamp(u, -tau, tau);
}

/// Regression design of an intercept column followed by K factor columns.
/// Requires n > K + 1 so the fit is identifiable with residual df to spare.
class DesignMatrix {
 public:
  static DesignMatrix with_factors(const MatrixXd& factors) {
    const Index n = factors.rows();
    const Index k = factors.cols();
    if (n <= k + 1)
      throw InsufficientDataError("DesignMatrix: need more rows than columns plus one");
    if (!factors.allFinite())
      throw std::invalid_argument("DesignMatrix: non-finite factor entries");
    MatrixXd g(n, k + 1);
    g.col(0).setOnes();
    g.rightCols(k) = factors;
    return DesignMatrix(std::move(g));
  }

  static DesignMatrix intercept_only(Index n) {
    if (n < 2) throw InsufficientDataError("DesignMatrix: need at least two rows");
    MatrixXd g(n, 1);
    g.setOnes();
    return DesignMatrix(std::move(g));
  }

  const MatrixXd& matrix() const { return g_; }
  Index n() const { return g_.rows(); }
  Index num_factors() const { return g_.cols() - 1; }

 private:
  explicit DesignMatrix(MatrixXd g) : g_(std::move(g)) {}
  MatrixXd g_;
};

/// Solver settings. `tau` overrides the data-driven rule when set;
/// `dimension_context` is the number of simultaneous estimates the rule
/// should account for (1 when fitting in isolation).
struct HuberConfig {
  std::optional<double> tau;
  double c = 2.0;
  std::vector<double> c_candidates{0.5, 1.0, 2.0};
  int max_iterations = 100;
  double convergence_tol = 1e-10;
  double min_active_fraction = 0.05;
  std::size_t dimension_context = 1;

  void validate() const {
    if (tau && !(*tau > 0.0))
      throw std::invalid_argument("HuberConfig: tau must be positive");
    if (!(c > 0.0)) throw std::invalid_argument("HuberConfig: c must be positive");
    if (max_iterations < 1)
      throw std::invalid_argument("HuberConfig: max_iterations must be at least 1");
    if (!(convergence_tol > 0.0))
      throw std::invalid_argument("HuberConfig: convergence_tol must be positive");
    if (!(min_active_fraction > 0.0) || min_active_fraction >= 1.0)
      throw std::invalid_argument("HuberConfig: min_active_fraction must lie in (0,1)");
    if (dimension_context < 1)
      throw std::invalid_argument("HuberConfig: dimension_context must be at least 1");
  }
};

struct HuberFit {
  double mu_hat = 0.0;
  VectorXd b_hat;
  double tau_used = 0.0;
  int iterations = 0;
  bool converged = false;
  bool nonconvex_warning = false;
  VectorXd residuals;
  double objective_value = 0.0;

  VectorXd theta() const {
    VectorXd t(b_hat.size() + 1);
    t[0] = mu_hat;
    t.tail(b_hat.size()) = b_hat;
    return t;
  }
};

/// Data-driven robustification bandwidth: c * sigma * sqrt(n / log(n p)).
/// Returns +infinity when the scale or the log factor is degenerate, which
/// turns the fit into plain least squares.
inline double tau_rule(double c, double sigma, Index n, std::size_t p) {
  const double lognp = std::log(double(n) * double(p));
  if (!(sigma > 0.0) || !(lognp > 0.0)) return std::numeric_limits<double>::infinity();
  return c * sigma * std::sqrt(double(n) / lognp);
}

namespace detail {

inline double huber_loss_raw(double u, double tau) {
  const double a = std::abs(u);
  return a <= tau ? 0.5 * u * u : tau * a - 0.5 * tau * tau;
}

inline double objective(const VectorXd& r, const VectorXd* w, double tau) {
  double s = 0.0;
  for (Index i = 0; i < r.size(); ++i)
    s += (w ? (*w)[i] : 1.0) * huber_loss_raw(r[i], tau);
  return s;
}

inline void check_design_rank(const MatrixXd& g) {
  Eigen::FullPivLU<MatrixXd> lu(g.transpose() * g);
  if (lu.rank() < g.cols())
    throw RankDeficientDesignError("design matrix has linearly dependent columns");
}

inline HuberFit make_fit(const VectorXd& theta, const VectorXd& y, const MatrixXd& g,
                         const VectorXd* w, double tau, int iterations, bool converged) {
  HuberFit fit;
  fit.mu_hat = theta[0];
  fit.b_hat = theta.tail(theta.size() - 1);
  fit.tau_used = tau;
  fit.iterations = iterations;
  fit.converged = converged;
  fit.residuals = y - g * theta;
  fit.objective_value = objective(fit.residuals, w, tau);
  return fit;
}

/// Method-of-scoring minimization of the (optionally weighted) Huber
/// objective. Starts at zero, scales the unweighted Gram inverse by the
/// fraction of residuals inside the bandwidth, and halves any step that
/// fails to reduce the objective. The active fraction is floored at
/// min_active_fraction so an iterate far outside the bandwidth still moves;
/// if descent stalls while the true fraction is below the floor the scale
/// is declared degenerate. A stall at a point already satisfying the
/// first-order condition is a converged fit: near the optimum the descent
/// increments fall below what the objective can resolve in floating point
/// before the update norm reaches the tolerance.
inline HuberFit scoring_fit(const VectorXd& y, const MatrixXd& g, const VectorXd* w,
                            double tau, const HuberConfig& cfg) {
  const Index n = g.rows();
  const Index d = g.cols();
  if (y.size() != n) throw std::invalid_argument("scoring_fit: length mismatch");
  if (!y.allFinite()) throw std::invalid_argument("scoring_fit: non-finite response");
  if (!(tau > 0.0)) throw std::invalid_argument("scoring_fit: tau must be positive");

  check_design_rank(g);

  double sum_w = double(n);
  bool any_negative = false;
  if (w) {
    if (w->size() != n) throw std::invalid_argument("scoring_fit: weight length mismatch");
    if (!w->allFinite()) throw std::invalid_argument("scoring_fit: non-finite weights");
    if ((w->array() == 0.0).all())
      throw std::invalid_argument("scoring_fit: weights are all zero");
    sum_w = w->sum();
    if (!(sum_w > 0.0))
      throw std::invalid_argument("scoring_fit: weights must have positive total mass");
    any_negative = (w->array() < 0.0).any();
  }

  MatrixXd gram = w ? MatrixXd(g.transpose() * w->asDiagonal() * g)
                    : MatrixXd(g.transpose() * g);
  Eigen::FullPivLU<MatrixXd> hess(gram);
  if (hess.rank() < d)
    throw RankDeficientDesignError("weighted design Gram matrix is singular");

  VectorXd theta = VectorXd::Zero(d);
  VectorXd r = y;
  double obj = objective(r, w, tau);

  int iterations = 0;
  bool converged = false;
  bool nonconvex_warning = false;
  double gradient_scale = 0.0;  // set from the score at the starting point

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    iterations = iter;

    VectorXd psi(n);
    double active_w = 0.0;
    for (Index i = 0; i < n; ++i) {
      psi[i] = std::clamp(r[i], -tau, tau);
      const double wi = w ? (*w)[i] : 1.0;
      if (std::abs(r[i]) <= tau) active_w += wi;
      if (w) psi[i] *= wi;
    }
    const double active_fraction = active_w / sum_w;
    const double scale = std::max(active_fraction, cfg.min_active_fraction);

    const VectorXd gradient = g.transpose() * psi;
    if (iter == 1) gradient_scale = 1.0 + gradient.lpNorm<Eigen::Infinity>();

    VectorXd delta = hess.solve(gradient) / scale;

    if (delta.lpNorm<Eigen::Infinity>() <= cfg.convergence_tol) {
      const VectorXd theta_try = theta + delta;
      const VectorXd r_try = y - g * theta_try;
      const double obj_try = objective(r_try, w, tau);
      if (obj_try <= obj) {
        theta = theta_try;
      }
      converged = true;
      break;
    }

    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving) {
      const VectorXd theta_try = theta + delta;
      const VectorXd r_try = y - g * theta_try;
      const double obj_try = objective(r_try, w, tau);
      if (obj_try < obj) {
        theta = theta_try;
        r = r_try;
        obj = obj_try;
        accepted = true;
        break;
      }
      delta *= 0.5;
    }

    if (!accepted) {
      if (gradient.lpNorm<Eigen::Infinity>() <= 1e-6 * gradient_scale) {
        converged = true;
      } else if (any_negative) {
        nonconvex_warning = true;
      } else if (active_fraction < cfg.min_active_fraction) {
        throw DegenerateScaleError(
            "scoring step cannot descend: too few residuals inside the bandwidth; "
            "increase tau");
      }
      break;
    }

    if (delta.lpNorm<Eigen::Infinity>() <= cfg.convergence_tol) {
      converged = true;
      break;
    }
  }

  HuberFit fit = make_fit(theta, y, g, w, tau, iterations, converged);
  fit.nonconvex_warning = nonconvex_warning && !converged;
  return fit;
}

/// Standard deviation of least-squares residuals with the residual degrees
/// of freedom n - d as divisor.
inline double ols_residual_sd(const VectorXd& y, const MatrixXd& g) {
  const Index n = g.rows();
  const Index d = g.cols();
  const VectorXd theta = (g.transpose() * g).llt().solve(g.transpose() * y);
  const VectorXd r = y - g * theta;
  if (n <= d) return 0.0;
  return std::sqrt(r.squaredNorm() / double(n - d));
}

}  // namespace detail

/// Least-squares fit with the same reporting shape as the robust solver.
inline HuberFit ols_fit(const VectorXd& y, const DesignMatrix& design) {
  const MatrixXd& g = design.matrix();
  if (y.size() != g.rows()) throw std::invalid_argument("ols_fit: length mismatch");
  if (!y.allFinite()) throw std::invalid_argument("ols_fit: non-finite response");
  detail::check_design_rank(g);
  const VectorXd theta = (g.transpose() * g).llt().solve(g.transpose() * y);
  return detail::make_fit(theta, y, g, nullptr, std::numeric_limits<double>::infinity(),
                          0, true);
}

/// Robust regression of y on the design. Uses the configured tau when given,
/// otherwise the data-driven rule with the least-squares residual scale.
inline HuberFit fit_adaptive_huber(const VectorXd& y, const DesignMatrix& design,
                                   const HuberConfig& cfg = {}) {
  cfg.validate();
  const MatrixXd& g = design.matrix();
  double tau;
  if (cfg.tau) {
    tau = *cfg.tau;
  } else {
    double sigma = detail::ols_residual_sd(y, g);
    // A scale at floating-point noise level means the least-squares fit is
    // already exact; clipping at that magnitude would be meaningless.
    if (sigma <= 1e-12 * std::max(1.0, y.lpNorm<Eigen::Infinity>())) sigma = 0.0;
    tau = tau_rule(cfg.c, sigma, g.rows(), cfg.dimension_context);
  }
  if (std::isinf(tau)) {
    HuberFit fit = ols_fit(y, design);
    fit.tau_used = tau;
    return fit;
  }
  return detail::scoring_fit(y, g, nullptr, tau, cfg);
}

/// Robust location estimate: the intercept-only case of the solver.
inline HuberFit huber_location(const VectorXd& x, double tau,
                               const HuberConfig& cfg = {}) {
  cfg.validate();
  if (!(tau > 0.0)) throw std::invalid_argument("huber_location: tau must be positive");
  if (x.size() < 1) throw InsufficientDataError("huber_location: empty sample");
  if (!x.allFinite()) throw std::invalid_argument("huber_location: non-finite entries");
  if (x.size() == 1) {
    HuberFit fit;
    fit.mu_hat = x[0];
    fit.b_hat = VectorXd(0);
    fit.tau_used = tau;
    fit.converged = true;
    fit.residuals = VectorXd::Zero(1);
    fit.objective_value = 0.0;
    return fit;
  }
  if (std::isinf(tau)) {
    HuberFit fit = ols_fit(x, DesignMatrix::intercept_only(x.size()));
    fit.tau_used = tau;
    return fit;
  }
  MatrixXd g(x.size(), 1);
  g.setOnes();
  return detail::scoring_fit(x, g, nullptr, tau, cfg);
}

/// Five-fold cross-validation over candidate rule constants, scored by mean
/// absolute held-out prediction error. Ties go to the larger constant.
inline double select_c(const VectorXd& y, const DesignMatrix& design,
                       const std::vector<double>& candidates,
                       std::size_t dimension_context = 1) {
  if (candidates.empty()) throw std::invalid_argument("select_c: no candidates");
  for (double c : candidates)
    if (!(c > 0.0)) throw std::invalid_argument("select_c: candidates must be positive");
  if (candidates.size() == 1) return candidates.front();

  constexpr int kFolds = 5;
  const Index n = design.n();
  if (y.size() != n) throw std::invalid_argument("select_c: length mismatch");
  if (n < 5 * kFolds)
    throw InsufficientDataError("select_c: need at least five observations per fold");

  const MatrixXd& g = design.matrix();
  double best_score = std::numeric_limits<double>::infinity();
  double best_c = candidates.front();

  for (double c : candidates) {
    double abs_err = 0.0;
    for (int fold = 0; fold < kFolds; ++fold) {
      std::vector<Index> train;
      std::vector<Index> test;
      for (Index i = 0; i < n; ++i)
        (i % kFolds == fold ? test : train).push_back(i);

      MatrixXd g_train(train.size(), g.cols());
      VectorXd y_train(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) {
        g_train.row(i) = g.row(train[i]);
        y_train[i] = y[train[i]];
      }

      double sigma = detail::ols_residual_sd(y_train, g_train);
      if (sigma <= 1e-12 * std::max(1.0, y_train.lpNorm<Eigen::Infinity>())) sigma = 0.0;
      const double tau = tau_rule(c, sigma, g_train.rows(), dimension_context);
      HuberConfig cfg;
      cfg.c = c;
      VectorXd theta;
      if (std::isinf(tau)) {
        theta = (g_train.transpose() * g_train).llt().solve(g_train.transpose() * y_train);
      } else {
        theta = detail::scoring_fit(y_train, g_train, nullptr, tau, cfg).theta();
      }

      for (Index i : test) abs_err += std::abs(y[i] - g.row(i).dot(theta));
    }
    const double score = abs_err / double(n);
    if (score < best_score || (score == best_score && c > best_c)) {
      best_score = score;
      best_c = c;
    }
  }
  return best_c;
}

}  // namespace robustfdp
