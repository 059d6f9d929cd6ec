#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "robustfdp/errors.hpp"
#include "robustfdp/huber.hpp"
#include "robustfdp/rng.hpp"

namespace robustfdp {

/// Random multiplier laws for the weighted bootstrap; each has unit mean and
/// unit variance.
enum class WeightScheme {
  two_bernoulli_half,
  exponential_unit,
  normal_one_one,
};

inline VectorXd draw_weights(RngStream& rng, WeightScheme scheme, Index n) {
  if (n < 1) throw std::invalid_argument("draw_weights: n must be positive");
  VectorXd w(n);
  switch (scheme) {
    case WeightScheme::two_bernoulli_half:
      for (Index i = 0; i < n; ++i) w[i] = rng.bernoulli(0.5) ? 2.0 : 0.0;
      break;
    case WeightScheme::exponential_unit:
      for (Index i = 0; i < n; ++i) w[i] = rng.exponential();
      break;
    case WeightScheme::normal_one_one:
      for (Index i = 0; i < n; ++i) w[i] = 1.0 + rng.normal();
      break;
    default:
      throw std::invalid_argument("draw_weights: unknown scheme");
  }
  return w;
}

/// Huber regression under observation multipliers, at a fixed bandwidth.
/// Unit multipliers reproduce the unweighted fit; multipliers that are all
/// zero or carry non-positive total mass are rejected by the solver.
inline HuberFit fit_weighted_huber(const VectorXd& y, const DesignMatrix& design,
                                   const VectorXd& weights, double tau,
                                   const HuberConfig& cfg = {}) {
  cfg.validate();
  if (y.size() != design.n())
    throw std::invalid_argument("fit_weighted_huber: length mismatch");
  return detail::scoring_fit(y, design.matrix(), &weights, tau, cfg);
}

struct BootstrapConfig {
  int num_replicates = 500;
  WeightScheme scheme = WeightScheme::exponential_unit;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_replicates < 1)
      throw std::invalid_argument("bootstrap: need at least one replicate");
  }
};

struct BootstrapResult {
  /// Per-column tail probability of the recentered replicate deviations.
  VectorXd pvalues;
  /// Replicates that produced a usable refit, per column.
  std::vector<int> effective_replicates;
  bool had_failures = false;
};

/// Weighted-bootstrap p-values for the column locations of a panel. Each
/// (replicate, column) pair owns a counter-based stream, so results do not
/// depend on evaluation order. Refits reuse each column's fitted bandwidth.
/// A replicate whose refit throws or fails to converge is dropped from that
/// column's count; a column losing every replicate is reported as degenerate.
inline BootstrapResult bootstrap_pvalues(const MatrixXd& x, const DesignMatrix& design,
                                         const std::vector<HuberFit>& fits,
                                         const BootstrapConfig& cfg = {}) {
  cfg.validate();
  const Index n = x.rows();
  const Index p = x.cols();
  if (n != design.n()) throw std::invalid_argument("bootstrap: row count mismatch");
  if (Index(fits.size()) != p)
    throw std::invalid_argument("bootstrap: one fit per column required");

  BootstrapResult result;
  result.pvalues.resize(p);
  result.effective_replicates.assign(std::size_t(p), 0);

  HuberConfig refit_cfg;
  for (Index j = 0; j < p; ++j) {
    const double center = std::abs(fits[std::size_t(j)].mu_hat);
    const double tau = fits[std::size_t(j)].tau_used;
    const VectorXd y = x.col(j);
    int exceedances = 0;
    int effective = 0;
    for (int b = 0; b < cfg.num_replicates; ++b) {
      RngStream rng(cfg.seed, "bootstrap_weights", std::uint64_t(b), std::uint64_t(j));
      const VectorXd w = draw_weights(rng, cfg.scheme, n);
      HuberFit refit;
      try {
        refit = detail::scoring_fit(y, design.matrix(), &w, tau, refit_cfg);
      } catch (const std::exception&) {
        result.had_failures = true;
        continue;
      }
      if (!refit.converged) {
        result.had_failures = true;
        continue;
      }
      ++effective;
      if (std::abs(refit.mu_hat - fits[std::size_t(j)].mu_hat) >= center) ++exceedances;
    }
    if (effective == 0)
      throw DegenerateDataError("bootstrap: every replicate failed for column " +
                                std::to_string(j));
    result.effective_replicates[std::size_t(j)] = effective;
    result.pvalues[j] = double(exceedances) / double(effective + 1);
  }
  return result;
}

}  // namespace robustfdp
