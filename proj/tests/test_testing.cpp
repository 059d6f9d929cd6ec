#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "robustfdp/huber.hpp"
#include "robustfdp/rng.hpp"
#include "robustfdp/testing.hpp"
#include "robustfdp/variance.hpp"

using namespace robustfdp;
using Catch::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Independent threshold oracle: walk a fine grid upward and return the first
/// cut whose directly computed false discovery proportion fits the budget.
double grid_threshold_oracle(const VectorXd& t, double alpha, double pi0) {
  // A feasible cut can sit far beyond every statistic when the budget is
  // tight, so the scan range covers the deep normal tail too.
  const double hi = t.cwiseAbs().maxCoeff() + 10.0;
  const Index p = t.size();
  for (double z = 0.0; z <= hi; z += 1e-4) {
    Index r = 0;
    for (Index j = 0; j < p; ++j)
      if (std::abs(t[j]) >= z) ++r;
    const double fdp =
        double(p) * pi0 * std::erfc(z / std::sqrt(2.0)) / std::max(double(r), 1.0);
    if (fdp <= alpha) return z;
  }
  return kInf;
}

TestStatistics make_stats(VectorXd values, Index n = 100) {
  TestStatistics stats;
  stats.values = std::move(values);
  stats.n = n;
  return stats;
}

HuberFit synthetic_fit(double mu) {
  HuberFit fit;
  fit.mu_hat = mu;
  fit.converged = true;
  return fit;
}

VarianceEstimate synthetic_var(double value) {
  VarianceEstimate est;
  est.value = value;
  return est;
}

double ks_against_standard_normal(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = double(sample.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = 1.0 - normal_upper_tail(sample[i]);
    dist = std::max(dist, std::abs(cdf - double(i) / n));
    dist = std::max(dist, std::abs(cdf - double(i + 1) / n));
  }
  return dist;
}

}  // namespace

TEST_CASE("normal tail and quantile invert each other", "[testing]") {
  REQUIRE(normal_upper_tail(0.0) == 0.5);
  REQUIRE(normal_upper_tail(1.9599639845400545) == Approx(0.025).epsilon(1e-12));
  REQUIRE(normal_upper_quantile(0.025) == Approx(1.9599639845400545).epsilon(1e-12));
  REQUIRE(normal_upper_quantile(0.5) == 0.0);
  REQUIRE(normal_upper_quantile(0.7) == 0.0);
  for (double target : {0.49, 0.4, 0.1, 1e-3, 1e-8, 1e-15, 1e-100}) {
    const double z = normal_upper_quantile(target);
    REQUIRE(normal_upper_tail(z) == Approx(target).epsilon(1e-10));
  }
  REQUIRE_THROWS_AS(normal_upper_quantile(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(normal_upper_quantile(-0.1), std::invalid_argument);
}

TEST_CASE("test statistics standardize locations by estimated errors", "[testing]") {
  VectorXd mu(2);
  mu << 1.0, -2.0;
  std::vector<VarianceEstimate> vars{synthetic_var(4.0), synthetic_var(0.25)};
  const TestStatistics stats = test_statistics(mu, vars, 16);
  REQUIRE(stats.values[0] == 2.0);
  REQUIRE(stats.values[1] == -16.0);
  REQUIRE(stats.n == 16);

  std::vector<HuberFit> fits{synthetic_fit(1.0), synthetic_fit(-2.0)};
  const TestStatistics from_fits = test_statistics(fits, vars, 16);
  REQUIRE(from_fits.values == stats.values);

  std::vector<VarianceEstimate> bad{synthetic_var(4.0), synthetic_var(0.0)};
  REQUIRE_THROWS_WITH(test_statistics(mu, bad, 16),
                      Catch::Matchers::ContainsSubstring("column 1"));
  std::vector<VarianceEstimate> short_vars{synthetic_var(4.0)};
  REQUIRE_THROWS_AS(test_statistics(mu, short_vars, 16), std::invalid_argument);
  REQUIRE_THROWS_AS(test_statistics(mu, vars, 0), std::invalid_argument);
}

TEST_CASE("two sided p values follow the normal tail and stay positive", "[testing]") {
  VectorXd t(4);
  t << 0.0, 1.9599639845400545, -1.9599639845400545, 50.0;
  const VectorXd p = normal_pvalues(make_stats(t));
  REQUIRE(p[0] == 1.0);
  REQUIRE(p[1] == Approx(0.05).epsilon(1e-12));
  REQUIRE(p[2] == p[1]);
  REQUIRE(p[3] == std::numeric_limits<double>::min());
  REQUIRE(p[3] > 0.0);
}

TEST_CASE("storey estimator counts the tail above lambda", "[testing]") {
  VectorXd p(4);
  p << 0.2, 0.6, 0.8, 1.0;
  REQUIRE(storey_pi0(p, 0.5) == 1.5);
  REQUIRE(storey_pi0(p, 0.0) == 1.0);

  // At lambda zero every valid p-value clears the cut, so the estimate is
  // exactly one whatever the inputs.
  RngStream rng(99, "storey");
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd q(30);
    for (Index j = 0; j < q.size(); ++j) q[j] = rng.positive_uniform();
    REQUIRE(storey_pi0(q, 0.0) == 1.0);
  }

  REQUIRE_THROWS_AS(storey_pi0(p, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(storey_pi0(p, -0.1), std::invalid_argument);
  VectorXd zero(2);
  zero << 0.0, 0.5;
  REQUIRE_THROWS_AS(storey_pi0(zero, 0.5), std::invalid_argument);
  VectorXd over(1);
  over << 1.5;
  REQUIRE_THROWS_AS(storey_pi0(over, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(storey_pi0(VectorXd(), 0.5), std::invalid_argument);
}

TEST_CASE("fdp estimate is exactly one at a zero cut", "[testing]") {
  VectorXd t(5);
  t << 3.0, -1.0, 0.5, 2.2, -4.1;
  const TestStatistics stats = make_stats(t);
  REQUIRE(fdp_estimate(0.0, stats, 1.0) == 1.0);

  // One statistic survives a cut at 1.2 in magnitude terms: 3.0, 2.2, -4.1.
  const double expected =
      2.0 * 5.0 * 0.8 * normal_upper_tail(1.2) / 3.0;
  REQUIRE(fdp_estimate(1.2, stats, 0.8) == Approx(expected).epsilon(1e-14));

  // Beyond every statistic the rejection count floors at one.
  const double far = 2.0 * 5.0 * 1.0 * normal_upper_tail(10.0);
  REQUIRE(fdp_estimate(10.0, stats, 1.0) == Approx(far).epsilon(1e-14));

  REQUIRE_THROWS_AS(fdp_estimate(-0.5, stats, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(fdp_estimate(1.0, stats, -1.0), std::invalid_argument);
}

TEST_CASE("rejection threshold matches a fine grid scan and step-up selection",
          "[testing]") {
  RngStream rng(2024, "threshold_property");
  const std::vector<Index> sizes{1, 2, 5, 20, 100};
  const std::vector<double> alphas{0.01, 0.05, 0.2, 0.5};
  const std::vector<double> pi0s{0.25, 0.7, 1.0, 1.3};

  int checked = 0;
  for (Index p : sizes) {
    for (double alpha : alphas) {
      for (double pi0 : pi0s) {
        VectorXd t(p);
        for (Index j = 0; j < p; ++j) {
          t[j] = rng.normal();
          if (rng.uniform01() < 0.3) t[j] += 3.5;
        }
        const TestStatistics stats = make_stats(t);
        const RejectionOutcome out = rejection_threshold(stats, alpha, pi0);

        REQUIRE(std::isfinite(out.threshold));
        REQUIRE(out.threshold >= 0.0);
        REQUIRE(fdp_estimate(out.threshold, stats, pi0) <= alpha + 1e-12);

        const double grid = grid_threshold_oracle(t, alpha, pi0);
        REQUIRE(out.threshold <= grid + 1e-9);
        REQUIRE(grid - out.threshold <= 1e-4 + 1e-9);
        if (out.threshold > 1e-6)
          REQUIRE(fdp_estimate(out.threshold - 1e-7, stats, pi0) > alpha);

        const std::vector<Index> bh = bh_select(out.pvalues, alpha, pi0);
        REQUIRE(out.rejected == bh);
        ++checked;
      }
    }
  }
  REQUIRE(checked == int(sizes.size() * alphas.size() * pi0s.size()));
}

TEST_CASE("rejections grow and thresholds shrink as alpha rises", "[testing]") {
  RngStream rng(7, "alpha_monotone");
  VectorXd t(60);
  for (Index j = 0; j < t.size(); ++j) {
    t[j] = rng.normal();
    if (j % 4 == 0) t[j] += 3.0;
  }
  const TestStatistics stats = make_stats(t);

  double prev_threshold = kInf;
  std::vector<Index> prev_rejected;
  for (double alpha : {0.02, 0.05, 0.1, 0.2, 0.35, 0.5}) {
    const RejectionOutcome out = rejection_threshold(stats, alpha, 1.0);
    REQUIRE(out.threshold <= prev_threshold);
    REQUIRE(std::includes(out.rejected.begin(), out.rejected.end(),
                          prev_rejected.begin(), prev_rejected.end()));
    prev_threshold = out.threshold;
    prev_rejected = out.rejected;
  }
}

TEST_CASE("zero null proportion rejects everything at threshold zero", "[testing]") {
  VectorXd t(4);
  t << 0.1, -0.2, 1.0, 0.0;
  const TestStatistics stats = make_stats(t);
  const RejectionOutcome out = rejection_threshold(stats, 0.05, 0.0);
  REQUIRE(out.threshold == 0.0);
  REQUIRE(out.rejected == std::vector<Index>{0, 1, 2, 3});
  REQUIRE(bh_select(out.pvalues, 0.05, 0.0) == out.rejected);
}

TEST_CASE("rejection outcome records its inputs", "[testing]") {
  VectorXd t(3);
  t << 2.5, 0.3, -3.0;
  const RejectionOutcome out = rejection_threshold(make_stats(t), 0.1, 0.9, 0.5);
  REQUIRE(out.alpha == 0.1);
  REQUIRE(out.pi0_hat == 0.9);
  REQUIRE(out.lambda == 0.5);
  REQUIRE(out.pvalues.size() == 3);
  REQUIRE_THROWS_AS(rejection_threshold(make_stats(t), 0.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(rejection_threshold(make_stats(t), 1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(rejection_threshold(make_stats(VectorXd()), 0.1, 1.0),
                    std::invalid_argument);
}

TEST_CASE("step-up selection handles pinned examples and ties", "[testing]") {
  VectorXd p(4);
  p << 0.01, 0.04, 0.3, 0.9;
  REQUIRE(bh_select(p, 0.05, 1.0) == std::vector<Index>{0});

  // Both tied p-values sit exactly at the surviving rank's boundary value.
  VectorXd tied(3);
  tied << 0.02, 0.02, 0.9;
  REQUIRE(bh_select(tied, 0.05, 1.0) == std::vector<Index>{0, 1});

  VectorXd none(3);
  none << 0.4, 0.6, 0.9;
  REQUIRE(bh_select(none, 0.05, 1.0).empty());

  // Inflating the null proportion halves every boundary.
  VectorXd edge(2);
  edge << 0.012, 0.8;
  REQUIRE(bh_select(edge, 0.05, 1.0) == std::vector<Index>{0});
  REQUIRE(bh_select(edge, 0.05, 2.5).empty());

  REQUIRE_THROWS_AS(bh_select(VectorXd(), 0.05, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(bh_select(p, 0.05, -1.0), std::invalid_argument);
}

TEST_CASE("naive t statistics match hand computation", "[testing]") {
  MatrixXd x(4, 2);
  x << 1.0, -1.0,
       2.0, 0.0,
       3.0, 1.0,
       4.0, 4.0;
  const TestStatistics stats = naive_t_statistics(x);
  REQUIRE(stats.variant == StatVariant::naive_marginal_t);
  // Column one: mean 2.5, sample variance 5/3, t = 2 * 2.5 / sqrt(5/3).
  REQUIRE(stats.values[0] == Approx(5.0 * std::sqrt(0.6)).epsilon(1e-14));
  // Column two: mean 1, sample variance (4 + 1 + 0 + 9) / 3.
  REQUIRE(stats.values[1] == Approx(2.0 / std::sqrt(14.0 / 3.0)).epsilon(1e-14));

  MatrixXd flat(3, 4);
  flat << 1.0, 5.0, 2.0, 7.0,
          2.0, 5.0, 4.0, 7.0,
          3.0, 5.0, 6.0, 7.0;
  REQUIRE_THROWS_WITH(naive_t_statistics(flat),
                      Catch::Matchers::ContainsSubstring("1, 3"));
  REQUIRE_THROWS_AS(naive_t_statistics(MatrixXd::Zero(1, 2)), InsufficientDataError);
}

TEST_CASE("two sample statistics standardize mean differences", "[testing]") {
  std::vector<HuberFit> f1{synthetic_fit(2.0)};
  std::vector<HuberFit> f2{synthetic_fit(0.5)};
  std::vector<VarianceEstimate> v1{synthetic_var(1.0)};
  std::vector<VarianceEstimate> v2{synthetic_var(4.0)};
  const TestStatistics stats = two_sample_statistics(f1, v1, 25, f2, v2, 16);
  REQUIRE(stats.variant == StatVariant::two_sample);
  REQUIRE(stats.n == 25);
  REQUIRE(stats.n2 == 16);
  REQUIRE(stats.values[0] == Approx(1.5 / std::sqrt(0.29)).epsilon(1e-14));

  const TestStatistics null_stats = two_sample_statistics(f1, v1, 25, f1, v1, 25);
  REQUIRE(null_stats.values[0] == 0.0);

  std::vector<VarianceEstimate> bad{synthetic_var(-1.0)};
  REQUIRE_THROWS_AS(two_sample_statistics(f1, v1, 25, f2, bad, 16),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(two_sample_statistics(f1, v1, 0, f2, v2, 16),
                    std::invalid_argument);
}

namespace {

/// Data matrix whose sample covariance has exactly the requested spectrum:
/// zero-mean orthonormal column blocks scaled by the target singular values.
MatrixXd matrix_with_spectrum(const VectorXd& eigenvalues, Index n, RngStream& rng) {
  const Index p = eigenvalues.size();
  MatrixXd raw(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) raw(i, j) = rng.normal();
  raw.rowwise() -= raw.colwise().mean();
  Eigen::HouseholderQR<MatrixXd> qr(raw);
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, p);

  MatrixXd rot_raw(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) rot_raw(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr2(rot_raw);
  const MatrixXd rot = qr2.householderQ() * MatrixXd::Identity(p, p);

  const VectorXd scales = (eigenvalues * double(n)).cwiseSqrt();
  return q * scales.asDiagonal() * rot.transpose();
}

}  // namespace

TEST_CASE("eigenvalue ratio picks the largest adjacent spectral gap", "[testing]") {
  RngStream rng(31, "spectrum");
  VectorXd spectrum(8);
  spectrum << 100.0, 50.0, 10.0, 1.0, 0.5, 0.3, 0.2, 0.1;
  const MatrixXd x = matrix_with_spectrum(spectrum, 64, rng);
  // Candidate ratios: 5 at two factors, 10 at three, 2 at four.
  REQUIRE(eigenvalue_ratio_k(x, 5) == 3);

  // Equal ratios everywhere resolve to the smallest candidate; powers of two
  // keep every ratio exactly representable.
  VectorXd geometric(8);
  geometric << 1024.0, 256.0, 64.0, 16.0, 4.0, 1.0, 0.25, 0.0625;
  REQUIRE(detail::argmax_adjacent_ratio(geometric, 5) == 2);
  REQUIRE(detail::argmax_adjacent_ratio(geometric, 7) == 2);
  VectorXd late_gap(6);
  late_gap << 64.0, 32.0, 16.0, 2.0, 1.0, 0.5;
  REQUIRE(detail::argmax_adjacent_ratio(late_gap, 5) == 3);

  REQUIRE_THROWS_AS(eigenvalue_ratio_k(x, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(eigenvalue_ratio_k(x, 8), std::invalid_argument);

  // A covariance of too low rank cannot support the requested search range.
  MatrixXd thin(6, 8);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 8; ++j) thin(i, j) = rng.normal();
  REQUIRE_THROWS_AS(eigenvalue_ratio_k(thin, 5), std::invalid_argument);
}

TEST_CASE("evaluate scores a rejection set against ground truth", "[testing]") {
  RejectionOutcome out;
  out.rejected = {0, 2, 3};
  const std::vector<bool> is_null{true, true, false, false, false, true};
  const Metrics m = evaluate(out, is_null);
  REQUIRE(m.discoveries == 3);
  REQUIRE(m.false_discoveries == 1);
  REQUIRE(m.missed == 1);
  REQUIRE(m.fdp == Approx(1.0 / 3.0));
  REQUIRE(m.tpr == Approx(2.0 / 3.0));
  REQUIRE(m.fnr == Approx(1.0 / 3.0));

  RejectionOutcome empty;
  const Metrics none = evaluate(empty, is_null);
  REQUIRE(none.fdp == 0.0);
  REQUIRE(none.tpr == 0.0);
  REQUIRE(none.fnr == Approx(0.5));

  RejectionOutcome all;
  all.rejected = {0, 1, 2, 3, 4, 5};
  const Metrics full = evaluate(all, is_null);
  REQUIRE(full.fnr == 0.0);
  REQUIRE(full.fdp == Approx(0.5));
  REQUIRE(full.tpr == 1.0);

  const Metrics no_alternatives = evaluate(empty, std::vector<bool>{true, true});
  REQUIRE(no_alternatives.tpr == 0.0);

  RejectionOutcome bad;
  bad.rejected = {9};
  REQUIRE_THROWS_AS(evaluate(bad, is_null), std::invalid_argument);
  REQUIRE_THROWS_AS(evaluate(empty, std::vector<bool>{}), std::invalid_argument);
}

TEST_CASE("null factor panel statistics are close to standard normal", "[testing]") {
  const Index n = 100;
  const Index p = 200;
  const int k = 3;
  RngStream factor_rng(515, "panel_factors");
  RngStream loading_rng(515, "panel_loadings");
  RngStream error_rng(515, "panel_errors");

  MatrixXd factors(n, k);
  for (Index i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) factors(i, j) = factor_rng.normal();
  const DesignMatrix design = DesignMatrix::with_factors(factors);
  const MatrixXd sigma_f = factor_cov(factors);

  std::vector<double> pooled;
  pooled.reserve(std::size_t(p));
  std::vector<HuberFit> fits;
  std::vector<VarianceEstimate> vars;
  for (Index j = 0; j < p; ++j) {
    VectorXd loadings(k);
    for (int l = 0; l < k; ++l) loadings[l] = loading_rng.uniform(0.5, 1.5);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i)
      y[i] = factors.row(i).dot(loadings) + error_rng.normal();

    HuberConfig cfg;
    cfg.dimension_context = std::size_t(p);
    const HuberFit fit = fit_adaptive_huber(y, design, cfg);
    const VarianceEstimate var =
        adaptive_huber_variance(y, fit, sigma_f, default_gamma(y, 2.0, std::size_t(p)));
    fits.push_back(fit);
    vars.push_back(var);
  }

  const TestStatistics stats = test_statistics(fits, vars, n);
  for (Index j = 0; j < p; ++j) pooled.push_back(stats.values[j]);
  REQUIRE(ks_against_standard_normal(pooled) < 0.12);

  // Nothing should survive a false discovery budget on a fully null panel
  // beyond a small accident count.
  const VectorXd pvals = normal_pvalues(stats);
  const double pi0 = storey_pi0(pvals, 0.5);
  const RejectionOutcome out = rejection_threshold(stats, 0.1, pi0, 0.5);
  REQUIRE(Index(out.rejected.size()) <= p / 20);
}
