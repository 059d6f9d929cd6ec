#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "robustfdp/config.hpp"
#include "robustfdp/errors.hpp"
#include "robustfdp/huber.hpp"
#include "robustfdp/rng.hpp"

namespace robustfdp {

/// How per-column factor loadings are drawn. The uniform model is fully
/// specified and is the reproducible default; the Gaussian model consumes
/// the calibration parameters.
enum class LoadingModel { uniform_appendix, calibrated_gaussian };

/// Three-factor calibration inputs. The shipped defaults are plausible
/// stand-ins, not values fitted to any dataset; treat magnitudes from runs
/// using them as qualitative.
struct Calibration {
  VectorXd mu_B;
  MatrixXd sigma_B;
  MatrixXd sigma_f;

  static Calibration plausible_default() {
    Calibration c;
    c.mu_B.resize(3);
    c.mu_B << 1.0, -1.5, 1.0;
    c.sigma_B = MatrixXd::Identity(3, 3) * 0.09;
    c.sigma_f.resize(3, 3);
    c.sigma_f << 1.0, 0.25, -0.1,
                 0.25, 0.9, 0.1,
                 -0.1, 0.1, 0.8;
    return c;
  }

  static Calibration from_config(const KeyValueConfig& cfg) {
    Calibration c;
    const std::vector<double> mu = cfg.get_doubles("mu_B");
    const std::vector<double> sb = cfg.get_doubles("sigma_B");
    const std::vector<double> sf = cfg.get_doubles("sigma_f");
    if (mu.size() != 3 || sb.size() != 9 || sf.size() != 9)
      throw IoError(cfg.origin() +
                    ": calibration needs mu_B (3 values) and sigma_B, sigma_f "
                    "(9 row-major values each)");
    c.mu_B = Eigen::Map<const VectorXd>(mu.data(), 3);
    c.sigma_B = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(sb.data());
    c.sigma_f = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(sf.data());
    return c;
  }

  void validate() const {
    if (mu_B.size() != 3 || sigma_B.rows() != 3 || sigma_B.cols() != 3 ||
        sigma_f.rows() != 3 || sigma_f.cols() != 3)
      throw std::invalid_argument("calibration: three-factor shapes required");
    if (Eigen::LLT<MatrixXd>(sigma_f).info() != Eigen::Success)
      throw std::invalid_argument("calibration: sigma_f must be positive definite");
    if (Eigen::LLT<MatrixXd>(sigma_B).info() != Eigen::Success)
      throw std::invalid_argument("calibration: sigma_B must be positive definite");
  }
};

struct FactorModelSpec {
  Index p = 0;
  Index n = 0;
  int num_factors = 3;
  LoadingModel loading_model = LoadingModel::uniform_appendix;
  Calibration calibration = Calibration::plausible_default();
  int error_model = 1;
  double pi1 = 0.25;
  double signal_c = 2.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (p < 1 || n < 1) throw std::invalid_argument("panel spec: p and n must be positive");
    if (num_factors != 3)
      throw std::invalid_argument("panel spec: the benchmark harness is three-factor");
    if (error_model < 1 || error_model > 8)
      throw std::invalid_argument("panel spec: error_model must lie in 1..8");
    if (!(pi1 >= 0.0) || pi1 > 1.0)
      throw std::invalid_argument("panel spec: pi1 must lie in [0, 1]");
    if (!(signal_c >= 0.0))
      throw std::invalid_argument("panel spec: signal_c must be nonnegative");
    calibration.validate();
  }
};

struct Panel {
  MatrixXd x;        // n by p observations
  MatrixXd factors;  // n by K
  VectorXd mu_true;
  std::vector<bool> is_null;  // true exactly where mu_true is zero
  FactorModelSpec spec;
};

/// Block-diagonal error covariance: four-wide equicorrelation blocks with a
/// fresh correlation in U[0, 0.5) per block; a trailing p mod 4 remainder
/// gets the same construction. Equicorrelation below one keeps every block
/// positive definite.
inline MatrixXd gen_sigma_u(Index p, RngStream& rng) {
  if (p < 1) throw std::invalid_argument("gen_sigma_u: p must be positive");
  MatrixXd sigma = MatrixXd::Zero(p, p);
  for (Index start = 0; start < p; start += 4) {
    const Index width = std::min<Index>(4, p - start);
    const double rho = rng.uniform(0.0, 0.5);
    for (Index a = 0; a < width; ++a)
      for (Index b = 0; b < width; ++b)
        sigma(start + a, start + b) = (a == b) ? 1.0 : rho;
  }
  return sigma;
}

namespace detail {

constexpr double kWeibullShape = 0.75;
constexpr double kWeibullScale = 0.75;

inline double weibull_mean() {
  return kWeibullScale * std::tgamma(1.0 + 1.0 / kWeibullShape);
}

/// Per-row sampler over a fixed error covariance; holds the Cholesky factor
/// so each row costs one triangular product.
class ErrorRowSampler {
 public:
  ErrorRowSampler(const MatrixXd& sigma_u, RngStream& rng)
      : rng_(rng), p_(sigma_u.rows()) {
    Eigen::LLT<MatrixXd> llt(sigma_u);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("gen_errors: Sigma_u must be positive definite");
    chol_ = llt.matrixL();
  }

  VectorXd gaussian() {
    VectorXd z(p_);
    for (Index i = 0; i < p_; ++i) z[i] = rng_.normal();
    return chol_ * z;
  }

  VectorXd student_t(double dof) {
    const double scale = std::sqrt(dof / rng_.chi_squared(dof));
    return gaussian() * scale;
  }

  /// Entrywise exponential of a correlated Gaussian row; unit log-variance
  /// makes every coordinate mean exp(1/2).
  VectorXd lognormal() { return gaussian().array().exp(); }

  VectorXd weibull() {
    VectorXd w(p_);
    for (Index i = 0; i < p_; ++i) w[i] = rng_.weibull(kWeibullShape, kWeibullScale);
    return w;
  }

  bool bernoulli(double q) { return rng_.bernoulli(q); }

 private:
  RngStream& rng_;
  Index p_;
  MatrixXd chol_;
};

}  // namespace detail

/// One i.i.d. sample of n error rows under the requested model. Mixture
/// models pick a component per row, with the stated probability attached to
/// the first-listed component.
inline MatrixXd gen_errors(int model, const MatrixXd& sigma_u, Index n, RngStream& rng) {
  if (model < 1 || model > 8)
    throw std::invalid_argument("gen_errors: error model must lie in 1..8");
  if (n < 1) throw std::invalid_argument("gen_errors: n must be positive");
  const Index p = sigma_u.rows();
  detail::ErrorRowSampler sampler(sigma_u, rng);

  const double lognormal_mean = std::exp(0.5);
  const double weibull_mean = detail::weibull_mean();
  const double inv_sqrt5 = 1.0 / std::sqrt(5.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  // Draw order within each row is fixed by explicit sequencing: components
  // never share one expression, so the stream consumption is well defined.
  MatrixXd u(n, p);
  for (Index i = 0; i < n; ++i) {
    VectorXd row;
    switch (model) {
      case 1:
        row = sampler.gaussian();
        break;
      case 2:
        row = inv_sqrt5 * sampler.student_t(2.5);
        break;
      case 3: {
        const VectorXd normal_part = sampler.gaussian();
        const VectorXd lognormal_part = sampler.lognormal();
        row = 0.5 * normal_part +
              0.5 * (lognormal_part.array() - lognormal_mean).matrix();
        break;
      }
      case 4: {
        const VectorXd t_part = sampler.student_t(4.0);
        const VectorXd weibull_part = sampler.weibull();
        row = 0.25 * t_part + 0.75 * (weibull_part.array() - weibull_mean).matrix();
        break;
      }
      case 5:
        row = inv_sqrt2 * sampler.student_t(4.0);
        break;
      case 6:
        if (sampler.bernoulli(0.6)) {
          row = inv_sqrt2 * sampler.student_t(4.0);
        } else {
          const VectorXd first = sampler.lognormal();
          const VectorXd second = sampler.lognormal();
          row = 0.25 * (first - second);
        }
        break;
      case 7:
        if (sampler.bernoulli(0.25)) {
          row = inv_sqrt2 * sampler.student_t(4.0);
        } else {
          const VectorXd first = sampler.weibull();
          const VectorXd second = sampler.weibull();
          row = 0.5 * (first - second);
        }
        break;
      case 8:
        row = sampler.bernoulli(0.9) ? VectorXd(inv_sqrt2 * sampler.student_t(4.0))
                                     : sampler.gaussian();
        break;
    }
    u.row(i) = row.transpose();
  }
  return u;
}

/// Full synthetic panel for one replication: loadings drawn once, factors
/// and errors per observation, first floor(pi1 * p) coordinates carrying the
/// signal sqrt(signal_c * log(p) / n). Each ingredient owns a stream derived
/// from (seed, purpose, replication), so panels are identical across thread
/// schedules and replications never share draws.
inline Panel gen_panel(const FactorModelSpec& spec, std::uint64_t replication = 0) {
  spec.validate();
  const Index p = spec.p;
  const Index n = spec.n;
  const int k = spec.num_factors;

  RngStream sigma_rng(spec.seed, "sigma_u", replication, 0);
  const MatrixXd sigma_u = gen_sigma_u(p, sigma_rng);

  RngStream loading_rng(spec.seed, "loadings", replication, 0);
  MatrixXd loadings(p, k);
  if (spec.loading_model == LoadingModel::uniform_appendix) {
    for (Index j = 0; j < p; ++j) {
      loadings(j, 0) = loading_rng.uniform(0.5, 1.5);
      loadings(j, 1) = loading_rng.uniform(-2.0, -1.0);
      loadings(j, 2) = loading_rng.uniform(0.5, 1.5);
    }
  } else {
    Eigen::LLT<MatrixXd> llt(spec.calibration.sigma_B);
    const MatrixXd chol = llt.matrixL();
    for (Index j = 0; j < p; ++j) {
      VectorXd z(k);
      for (int l = 0; l < k; ++l) z[l] = loading_rng.normal();
      loadings.row(j) = (spec.calibration.mu_B + chol * z).transpose();
    }
  }

  RngStream factor_rng(spec.seed, "factors", replication, 0);
  Eigen::LLT<MatrixXd> factor_llt(spec.calibration.sigma_f);
  const MatrixXd factor_chol = factor_llt.matrixL();
  MatrixXd factors(n, k);
  for (Index i = 0; i < n; ++i) {
    VectorXd z(k);
    for (int l = 0; l < k; ++l) z[l] = factor_rng.normal();
    factors.row(i) = (factor_chol * z).transpose();
  }

  RngStream error_rng(spec.seed, "errors", replication, 0);
  const MatrixXd errors = gen_errors(spec.error_model, sigma_u, n, error_rng);

  Panel panel;
  panel.spec = spec;
  panel.factors = factors;
  panel.mu_true = VectorXd::Zero(p);
  const Index num_alternatives = Index(std::floor(spec.pi1 * double(p)));
  const double mu = std::sqrt(spec.signal_c * std::log(double(p)) / double(n));
  for (Index j = 0; j < num_alternatives; ++j) panel.mu_true[j] = mu;
  panel.is_null.assign(std::size_t(p), true);
  for (Index j = 0; j < num_alternatives; ++j) panel.is_null[std::size_t(j)] = false;

  panel.x = factors * loadings.transpose() + errors;
  panel.x.rowwise() += panel.mu_true.transpose();
  return panel;
}

/// Histogram input for the estimator-comparison experiment: count rows of
/// n i.i.d. unit-variance scaled t draws with 2.5 degrees of freedom.
inline MatrixXd gen_figure1_sample(Index n, Index count, RngStream& rng) {
  if (n < 1 || count < 1)
    throw std::invalid_argument("gen_figure1_sample: positive shape required");
  const double inv_sqrt5 = 1.0 / std::sqrt(5.0);
  MatrixXd sample(count, n);
  for (Index r = 0; r < count; ++r)
    for (Index i = 0; i < n; ++i) {
      const double t = rng.normal() * std::sqrt(2.5 / rng.chi_squared(2.5));
      sample(r, i) = t * inv_sqrt5;
    }
  return sample;
}

}  // namespace robustfdp
