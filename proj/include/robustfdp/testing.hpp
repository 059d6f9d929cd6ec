#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "robustfdp/errors.hpp"
#include "robustfdp/huber.hpp"
#include "robustfdp/variance.hpp"

namespace robustfdp {

/// Upper tail of the standard normal, accurate far into the tails.
inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// Inverse of normal_upper_tail on (0, 0.5]; returns 0 for targets >= 0.5.
/// Newton refinement from a crude tail start converges in a handful of steps
/// for every target the threshold search can produce.
inline double normal_upper_quantile(double target) {
  if (!(target > 0.0)) throw std::invalid_argument("normal_upper_quantile: target <= 0");
  if (target >= 0.5) return 0.0;
  double z = std::sqrt(std::max(0.0, -2.0 * std::log(2.0 * target)));
  if (z == 0.0) z = 1e-8;
  for (int i = 0; i < 60; ++i) {
    const double f = normal_upper_tail(z) - target;
    const double density =
        std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    if (density == 0.0) break;
    const double step = f / density;
    z += step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return std::max(z, 0.0);
}

enum class StatVariant {
  adaptive_huber,
  median_of_means,
  ols_dependence_adjusted,
  naive_marginal_t,
  two_sample,
};

struct TestStatistics {
  VectorXd values;
  StatVariant variant = StatVariant::adaptive_huber;
  Index n = 0;
  Index n2 = 0;  // second-group size for the two-sample variant
};

/// Per-hypothesis standardized statistics sqrt(n) * mu_hat / sqrt(variance).
inline TestStatistics test_statistics(const VectorXd& mu_hats,
                                      const std::vector<VarianceEstimate>& var_hats,
                                      Index n,
                                      StatVariant variant = StatVariant::adaptive_huber) {
  if (mu_hats.size() != Index(var_hats.size()))
    throw std::invalid_argument("test_statistics: length mismatch");
  if (n < 1) throw std::invalid_argument("test_statistics: n must be positive");
  TestStatistics stats;
  stats.values.resize(mu_hats.size());
  stats.variant = variant;
  stats.n = n;
  const double root_n = std::sqrt(double(n));
  for (Index j = 0; j < mu_hats.size(); ++j) {
    if (!(var_hats[j].value > 0.0))
      throw std::invalid_argument("test_statistics: non-positive variance at column " +
                                  std::to_string(j));
    stats.values[j] = root_n * mu_hats[j] / std::sqrt(var_hats[j].value);
    if (!std::isfinite(stats.values[j]))
      throw std::invalid_argument("test_statistics: non-finite statistic at column " +
                                  std::to_string(j));
  }
  return stats;
}

/// Convenience overload pulling the location estimates out of finished fits.
inline TestStatistics test_statistics(const std::vector<HuberFit>& fits,
                                      const std::vector<VarianceEstimate>& var_hats,
                                      Index n,
                                      StatVariant variant = StatVariant::adaptive_huber) {
  VectorXd mu(Index(fits.size()));
  for (Index j = 0; j < mu.size(); ++j) mu[j] = fits[std::size_t(j)].mu_hat;
  return test_statistics(mu, var_hats, n, variant);
}

/// Two-sided normal p-values, clamped into (0, 1] so downstream counting of
/// strictly positive p-values is exact.
inline VectorXd normal_pvalues(const TestStatistics& stats) {
  VectorXd p(stats.values.size());
  for (Index j = 0; j < p.size(); ++j) {
    p[j] = std::max(std::erfc(std::abs(stats.values[j]) / std::numbers::sqrt2),
                    std::numeric_limits<double>::min());
  }
  return p;
}

/// Null-proportion estimate from the p-value tail beyond lambda. At lambda
/// zero every valid p-value exceeds the cut, so the estimate is exactly one.
inline double storey_pi0(const VectorXd& pvalues, double lambda) {
  if (!(lambda >= 0.0) || lambda >= 1.0)
    throw std::invalid_argument("storey_pi0: lambda must lie in [0, 1)");
  if (pvalues.size() < 1) throw std::invalid_argument("storey_pi0: empty p-vector");
  Index count = 0;
  for (Index j = 0; j < pvalues.size(); ++j) {
    if (!(pvalues[j] > 0.0) || pvalues[j] > 1.0)
      throw std::invalid_argument("storey_pi0: p-values must lie in (0, 1]");
    if (pvalues[j] > lambda) ++count;
  }
  return double(count) / ((1.0 - lambda) * double(pvalues.size()));
}

/// Estimated false discovery proportion when rejecting at |T| >= z.
inline double fdp_estimate(double z, const TestStatistics& stats, double pi0_hat) {
  if (!(z >= 0.0)) throw std::invalid_argument("fdp_estimate: z must be nonnegative");
  if (!(pi0_hat >= 0.0)) throw std::invalid_argument("fdp_estimate: pi0_hat negative");
  const Index p = stats.values.size();
  Index rejections = 0;
  for (Index j = 0; j < p; ++j)
    if (std::abs(stats.values[j]) >= z) ++rejections;
  return 2.0 * double(p) * pi0_hat * normal_upper_tail(z) /
         std::max(double(rejections), 1.0);
}

struct RejectionOutcome {
  double threshold = std::numeric_limits<double>::infinity();
  std::vector<Index> rejected;
  double pi0_hat = 1.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.0;
  VectorXd pvalues;
};

/// Smallest z >= 0 whose estimated false discovery proportion is within
/// alpha, located exactly: the rejection count is constant between sorted
/// absolute statistics, so on each such piece the crossing is either the
/// closed right endpoint or the solution of a normal-tail equation.
inline RejectionOutcome rejection_threshold(const TestStatistics& stats, double alpha,
                                            double pi0_hat,
                                            double lambda = std::numeric_limits<double>::quiet_NaN()) {
  if (!(alpha > 0.0) || alpha >= 1.0)
    throw std::invalid_argument("rejection_threshold: alpha must lie in (0, 1)");
  if (!(pi0_hat >= 0.0))
    throw std::invalid_argument("rejection_threshold: pi0_hat negative");
  const Index p = stats.values.size();
  if (p < 1) throw std::invalid_argument("rejection_threshold: no statistics");

  RejectionOutcome out;
  out.pi0_hat = pi0_hat;
  out.lambda = lambda;
  out.alpha = alpha;
  out.pvalues = normal_pvalues(stats);

  VectorXd abs_t = stats.values.cwiseAbs();
  std::vector<double> sorted(abs_t.data(), abs_t.data() + p);
  std::sort(sorted.begin(), sorted.end());

  const double numerator_scale = 2.0 * double(p) * pi0_hat;
  double threshold = std::numeric_limits<double>::infinity();

  // Piece k covers (sorted[k-1], sorted[k]] with p - k statistics at or above
  // any interior point; k = 0 covers [0, sorted[0]] where all p qualify, and
  // k = p covers (sorted[p-1], infinity) where none do.
  for (Index k = 0; k <= p; ++k) {
    const double piece_lo = (k == 0) ? 0.0 : sorted[k - 1];
    const double piece_hi = (k == Index(p)) ? std::numeric_limits<double>::infinity()
                                            : sorted[k];
    const double rejections = std::max(double(p - k), 1.0);
    const double target = alpha * rejections / numerator_scale;
    // FDP <= alpha on this piece exactly where the normal tail is below target.
    const double z_cross = (target >= 0.5) ? 0.0 : normal_upper_quantile(target);
    const double candidate = std::max(z_cross, piece_lo);
    if (candidate <= piece_hi) {
      threshold = candidate;
      break;
    }
  }

  out.threshold = threshold;
  for (Index j = 0; j < p; ++j)
    if (std::abs(stats.values[j]) >= threshold) out.rejected.push_back(j);
  return out;
}

/// Step-up selection on sorted p-values against the linear boundary
/// alpha * rank / (pi0_hat * p); ties with the critical p-value are included.
inline std::vector<Index> bh_select(const VectorXd& pvalues, double alpha,
                                    double pi0_hat) {
  if (!(alpha > 0.0) || alpha >= 1.0)
    throw std::invalid_argument("bh_select: alpha must lie in (0, 1)");
  if (!(pi0_hat >= 0.0)) throw std::invalid_argument("bh_select: pi0_hat negative");
  const Index p = pvalues.size();
  if (p < 1) throw std::invalid_argument("bh_select: empty p-vector");

  std::vector<Index> rejected;
  if (pi0_hat == 0.0) {
    rejected.resize(std::size_t(p));
    std::iota(rejected.begin(), rejected.end(), Index(0));
    return rejected;
  }

  std::vector<double> sorted(pvalues.data(), pvalues.data() + p);
  std::sort(sorted.begin(), sorted.end());
  double critical = -1.0;
  for (Index j = p; j >= 1; --j) {
    if (sorted[j - 1] <= alpha * double(j) / (pi0_hat * double(p))) {
      critical = sorted[j - 1];
      break;
    }
  }
  if (critical < 0.0) return rejected;
  for (Index j = 0; j < p; ++j)
    if (pvalues[j] <= critical) rejected.push_back(j);
  return rejected;
}

/// Column-wise one-sample t statistics with the usual sample moments.
inline TestStatistics naive_t_statistics(const MatrixXd& x) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < 2) throw InsufficientDataError("naive_t_statistics: need at least two rows");
  if (!x.allFinite()) throw std::invalid_argument("naive_t_statistics: non-finite entries");

  TestStatistics stats;
  stats.values.resize(p);
  stats.variant = StatVariant::naive_marginal_t;
  stats.n = n;
  std::string degenerate;
  for (Index j = 0; j < p; ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() / double(n - 1);
    if (!(var > 0.0)) {
      degenerate += (degenerate.empty() ? "" : ", ") + std::to_string(j);
      continue;
    }
    stats.values[j] = std::sqrt(double(n)) * mean / std::sqrt(var);
  }
  if (!degenerate.empty())
    throw std::invalid_argument("naive_t_statistics: zero variance in columns " +
                                degenerate);
  return stats;
}

/// Standardized mean differences between two independent panels.
inline TestStatistics two_sample_statistics(const std::vector<HuberFit>& fits1,
                                            const std::vector<VarianceEstimate>& vars1,
                                            Index n1,
                                            const std::vector<HuberFit>& fits2,
                                            const std::vector<VarianceEstimate>& vars2,
                                            Index n2) {
  const std::size_t p = fits1.size();
  if (vars1.size() != p || fits2.size() != p || vars2.size() != p)
    throw std::invalid_argument("two_sample_statistics: length mismatch");
  if (n1 < 1 || n2 < 1)
    throw std::invalid_argument("two_sample_statistics: sample sizes must be positive");
  TestStatistics stats;
  stats.values.resize(Index(p));
  stats.variant = StatVariant::two_sample;
  stats.n = n1;
  stats.n2 = n2;
  for (std::size_t j = 0; j < p; ++j) {
    if (!(vars1[j].value > 0.0) || !(vars2[j].value > 0.0))
      throw std::invalid_argument("two_sample_statistics: non-positive variance at column " +
                                  std::to_string(j));
    const double se =
        std::sqrt(vars1[j].value / double(n1) + vars2[j].value / double(n2));
    stats.values[Index(j)] = (fits1[j].mu_hat - fits2[j].mu_hat) / se;
  }
  return stats;
}

namespace detail {

/// Argmax of ev[k-1] / ev[k] over k in {2, ..., kmax - 1} on a descending
/// spectrum; the strict comparison sends ties to the smaller candidate.
inline int argmax_adjacent_ratio(const VectorXd& descending_ev, int kmax) {
  int best_k = 2;
  double best_ratio = -1.0;
  for (int k = 2; k < kmax; ++k) {
    const double ratio = descending_ev[k - 1] / descending_ev[k];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace detail

/// Factor count by the largest adjacent eigenvalue ratio of the sample
/// covariance, searched strictly between 1 and kmax; ties go to the smaller
/// candidate.
inline int eigenvalue_ratio_k(const MatrixXd& x, int kmax) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (kmax < 3 || Index(kmax) >= std::min(n, p))
    throw std::invalid_argument("eigenvalue_ratio_k: need 3 <= kmax < min(n, p)");
  if (!x.allFinite()) throw std::invalid_argument("eigenvalue_ratio_k: non-finite entries");

  const Eigen::RowVectorXd mean = x.colwise().mean();
  const MatrixXd centered = x.rowwise() - mean;
  const MatrixXd cov = (centered.transpose() * centered) / double(n);
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigenvalue_ratio_k: eigenvalue computation failed");
  // Ascending from the solver; flip to descending.
  const VectorXd ev = solver.eigenvalues().reverse();

  const double floor = 1e-12 * std::max(ev[0], 1.0);
  if (!(ev[kmax] > floor))
    throw std::invalid_argument("eigenvalue_ratio_k: covariance rank too low for kmax");

  return detail::argmax_adjacent_ratio(ev, kmax);
}

struct Metrics {
  double fdp = 0.0;
  double fnr = 0.0;
  double tpr = 0.0;
  Index false_discoveries = 0;
  Index discoveries = 0;
  Index missed = 0;
};

/// Error rates of a rejection set against ground truth (true means null).
inline Metrics evaluate(const RejectionOutcome& outcome,
                        const std::vector<bool>& is_null) {
  const Index p = Index(is_null.size());
  if (p < 1) throw std::invalid_argument("evaluate: empty truth vector");
  std::vector<bool> rejected(std::size_t(p), false);
  for (Index j : outcome.rejected) {
    if (j < 0 || j >= p) throw std::invalid_argument("evaluate: rejected index out of range");
    rejected[std::size_t(j)] = true;
  }
  Metrics m;
  Index alternatives = 0;
  Index correct = 0;
  for (Index j = 0; j < p; ++j) {
    const bool null_j = is_null[std::size_t(j)];
    if (!null_j) ++alternatives;
    if (rejected[std::size_t(j)]) {
      ++m.discoveries;
      if (null_j) ++m.false_discoveries;
      else ++correct;
    } else if (!null_j) {
      ++m.missed;
    }
  }
  m.fdp = double(m.false_discoveries) / std::max(double(m.discoveries), 1.0);
  m.fnr = (p == m.discoveries) ? 0.0 : double(m.missed) / double(p - m.discoveries);
  m.tpr = (alternatives == 0) ? 0.0 : double(correct) / double(alternatives);
  return m;
}

}  // namespace robustfdp
