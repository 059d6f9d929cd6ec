#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "robustfdp/errors.hpp"
#include "robustfdp/huber.hpp"

namespace robustfdp {

/// Second-moment matrix of the factor rows, divisor n.
inline MatrixXd factor_cov(const MatrixXd& factors) {
  if (factors.rows() < 1) throw InsufficientDataError("factor_cov: no rows");
  if (!factors.allFinite()) throw std::invalid_argument("factor_cov: non-finite entries");
  return (factors.transpose() * factors) / double(factors.rows());
}

struct SecondMomentEstimate {
  double value = 0.0;
  bool clamped = false;  // the robust location of the squares was non-positive
};

/// Robust estimate of E[x^2]: the robust location of the squared data.
inline SecondMomentEstimate huber_second_moment(const VectorXd& x, double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("huber_second_moment: gamma must be positive");
  if (x.size() < 1) throw InsufficientDataError("huber_second_moment: empty sample");
  if (!x.allFinite())
    throw std::invalid_argument("huber_second_moment: non-finite entries");
  const VectorXd squares = x.array().square();
  if ((squares.array() == 0.0).all())
    throw DegenerateDataError("huber_second_moment: all observations are zero");
  const double theta = huber_location(squares, gamma).mu_hat;
  if (theta > 0.0) return {theta, false};
  const double floor =
      std::numeric_limits<double>::epsilon() * std::max(1.0, squares.maxCoeff());
  return {floor, true};
}

/// Bandwidth rule for the second-moment fit: the scale is the standard
/// deviation of the squared data.
inline double default_gamma(const VectorXd& x, double c = 2.0, std::size_t p = 1) {
  const VectorXd squares = x.array().square();
  const double mean = squares.mean();
  double var = 0.0;
  if (x.size() > 1) var = (squares.array() - mean).square().sum() / double(x.size() - 1);
  double sd = std::sqrt(var);
  if (sd <= 1e-12 * std::max(1.0, squares.maxCoeff())) sd = 0.0;
  return tau_rule(c, sd, x.size(), p);
}

struct VarianceEstimate {
  enum class Method { adaptive_huber, median_of_means, median_of_means_modified };

  double value = 0.0;
  Method method = Method::adaptive_huber;
  bool fallback_used = false;   // the common-component subtraction was skipped
  double raw_moment = 0.0;      // estimate before any subtraction
  double common_variance = 0.0; // loadings' quadratic form in the factor cov
};

namespace detail {

inline double common_component(const HuberFit& fit, const MatrixXd& sigma_f_hat) {
  if (fit.b_hat.size() == 0) return 0.0;
  if (sigma_f_hat.rows() != fit.b_hat.size() || sigma_f_hat.cols() != fit.b_hat.size())
    throw std::invalid_argument("variance: factor covariance shape mismatch");
  return fit.b_hat.dot(sigma_f_hat * fit.b_hat);
}

/// Subtract the fitted mean square and common component when that leaves a
/// positive value; otherwise report the raw moment with the fallback flag.
inline VarianceEstimate subtract_or_fallback(double raw, const HuberFit& fit,
                                             const MatrixXd& sigma_f_hat,
                                             VarianceEstimate::Method method) {
  VarianceEstimate est;
  est.method = method;
  est.raw_moment = raw;
  est.common_variance = common_component(fit, sigma_f_hat);
  const double subtracted = fit.mu_hat * fit.mu_hat + est.common_variance;
  if (raw > subtracted) {
    est.value = raw - subtracted;
    est.fallback_used = false;
  } else {
    est.value = raw;
    est.fallback_used = true;
  }
  return est;
}

}  // namespace detail

/// Idiosyncratic variance via the robust second moment: the estimated mean
/// square minus the fitted mean squared and the common factor component,
/// falling back to the raw moment when the subtraction would not be positive.
inline VarianceEstimate adaptive_huber_variance(const VectorXd& x, const HuberFit& fit,
                                                const MatrixXd& sigma_f_hat,
                                                double gamma) {
  double raw;
  if (std::isinf(gamma)) {
    // Infinite bandwidth: the robust location of the squares is their mean.
    if (x.size() < 1) throw InsufficientDataError("adaptive_huber_variance: empty sample");
    if (!x.allFinite())
      throw std::invalid_argument("adaptive_huber_variance: non-finite entries");
    const VectorXd squares = x.array().square();
    if ((squares.array() == 0.0).all())
      throw DegenerateDataError("adaptive_huber_variance: all observations are zero");
    raw = squares.mean();
  } else {
    raw = huber_second_moment(x, gamma).value;
  }
  return detail::subtract_or_fallback(raw, fit, sigma_f_hat,
                                      VarianceEstimate::Method::adaptive_huber);
}

struct BlockPartition {
  int num_blocks = 0;
  // Half-open index ranges; the last block absorbs the remainder.
  std::vector<std::pair<Index, Index>> blocks;
};

inline BlockPartition mom_blocks(Index n, int num_blocks) {
  if (num_blocks < 1 || Index(num_blocks) > n)
    throw std::invalid_argument("mom_blocks: need 1 <= V <= n");
  BlockPartition part;
  part.num_blocks = num_blocks;
  const Index m = n / num_blocks;
  for (int k = 0; k < num_blocks; ++k) {
    const Index lo = Index(k) * m;
    const Index hi = (k == num_blocks - 1) ? n : lo + m;
    part.blocks.emplace_back(lo, hi);
  }
  return part;
}

struct MomSigma {
  double value = 0.0;
  bool degenerate = false;  // the sample carries no pairwise dispersion
};

/// Median over block pairs of the decoupled pairwise-difference statistic
/// (x_i - x_j)^2 / 2 averaged across one block against another.
inline MomSigma mom_sigma_jj(const VectorXd& x, int num_blocks) {
  if (num_blocks < 2) throw std::invalid_argument("mom_sigma_jj: need V >= 2");
  const Index n = x.size();
  if (Index(num_blocks) > n)
    throw InsufficientDataError("mom_sigma_jj: more blocks than observations");
  if (!x.allFinite()) throw std::invalid_argument("mom_sigma_jj: non-finite entries");

  const BlockPartition part = mom_blocks(n, num_blocks);
  std::vector<double> stats;
  stats.reserve(std::size_t(num_blocks) * (num_blocks - 1) / 2);
  for (int k = 0; k < num_blocks; ++k) {
    for (int l = k + 1; l < num_blocks; ++l) {
      const auto [k_lo, k_hi] = part.blocks[k];
      const auto [l_lo, l_hi] = part.blocks[l];
      double sum = 0.0;
      for (Index i = k_lo; i < k_hi; ++i)
        for (Index j = l_lo; j < l_hi; ++j) {
          const double d = x[i] - x[j];
          sum += d * d;
        }
      stats.push_back(sum / (2.0 * double(k_hi - k_lo) * double(l_hi - l_lo)));
    }
  }

  std::sort(stats.begin(), stats.end());
  const std::size_t m = stats.size();
  const double median =
      (m % 2 == 1) ? stats[m / 2] : 0.5 * (stats[m / 2 - 1] + stats[m / 2]);
  return {median, median == 0.0};
}

/// Idiosyncratic variance via the median-of-means pairwise statistic.
inline VarianceEstimate mom_variance(const VectorXd& x, const HuberFit& fit,
                                     const MatrixXd& sigma_f_hat, int num_blocks) {
  const MomSigma sigma = mom_sigma_jj(x, num_blocks);
  if (sigma.degenerate)
    throw DegenerateDataError("mom_variance: sample has no pairwise dispersion");
  VarianceEstimate est;
  est.method = VarianceEstimate::Method::median_of_means;
  est.raw_moment = sigma.value;
  est.common_variance = detail::common_component(fit, sigma_f_hat);
  if (sigma.value > est.common_variance) {
    est.value = sigma.value - est.common_variance;
    est.fallback_used = false;
  } else {
    est.value = sigma.value;
    est.fallback_used = true;
  }
  return est;
}

/// Variant that sweeps the block count from 2 to V, discards sweep values
/// at or below the common factor component, and takes the 0.75 empirical
/// quantile (lower interpolation) of the survivors before subtracting.
/// With no survivors the single-V estimate is reported with the fallback
/// flag set.
inline VarianceEstimate mom_variance_modified(const VectorXd& x, const HuberFit& fit,
                                              const MatrixXd& sigma_f_hat,
                                              int num_blocks) {
  if (num_blocks < 2) throw std::invalid_argument("mom_variance_modified: need V >= 2");
  const double common = detail::common_component(fit, sigma_f_hat);

  std::vector<double> sweep;
  sweep.reserve(std::size_t(num_blocks) - 1);
  for (int v = 2; v <= num_blocks; ++v) sweep.push_back(mom_sigma_jj(x, v).value);

  std::vector<double> survivors;
  for (double s : sweep)
    if (s > common) survivors.push_back(s);

  if (survivors.empty()) {
    VarianceEstimate est = mom_variance(x, fit, sigma_f_hat, num_blocks);
    est.method = VarianceEstimate::Method::median_of_means_modified;
    est.fallback_used = true;
    return est;
  }

  std::sort(survivors.begin(), survivors.end());
  const std::size_t m = survivors.size();
  const std::size_t rank = std::size_t(std::ceil(0.75 * double(m)));  // 1-based
  const double quantile = survivors[rank - 1];

  VarianceEstimate est;
  est.method = VarianceEstimate::Method::median_of_means_modified;
  est.raw_moment = quantile;
  est.common_variance = common;
  est.value = quantile - common;
  est.fallback_used = false;
  return est;
}

/// Default block count for the median-of-means estimators.
inline int default_num_blocks(Index n, std::size_t p) {
  const double v = std::ceil(0.5 * std::log(double(p) * double(n)));
  return std::max(2, int(v));
}

}  // namespace robustfdp
