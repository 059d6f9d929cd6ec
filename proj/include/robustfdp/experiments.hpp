#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "robustfdp/bootstrap.hpp"
#include "robustfdp/config.hpp"
#include "robustfdp/datagen.hpp"
#include "robustfdp/errors.hpp"
#include "robustfdp/huber.hpp"
#include "robustfdp/panel_io.hpp"
#include "robustfdp/parallel.hpp"
#include "robustfdp/rng.hpp"
#include "robustfdp/testing.hpp"
#include "robustfdp/variance.hpp"
#include "robustfdp/version.hpp"

namespace robustfdp {

/// Multiple-testing pipelines the benchmark harness compares.
enum class Method { rd_a_normal, rd_a_bootstrap, rd_a_mom, od_a, naive };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::rd_a_normal: return "rd_a_normal";
    case Method::rd_a_bootstrap: return "rd_a_bootstrap";
    case Method::rd_a_mom: return "rd_a_mom";
    case Method::od_a: return "od_a";
    case Method::naive: return "naive";
  }
  throw std::invalid_argument("method_name: unknown method");
}

inline Method method_from_string(const std::string& name) {
  if (name == "rd_a_normal") return Method::rd_a_normal;
  if (name == "rd_a_bootstrap") return Method::rd_a_bootstrap;
  if (name == "rd_a_mom") return Method::rd_a_mom;
  if (name == "od_a") return Method::od_a;
  if (name == "naive") return Method::naive;
  throw std::invalid_argument("unknown method: " + name);
}

struct ExperimentConfig {
  FactorModelSpec spec;
  std::vector<Method> methods{Method::rd_a_normal, Method::od_a, Method::naive};
  std::vector<double> alphas{0.05, 0.10, 0.20};
  // Desk-scale defaults; a replication sweep at publication scale raises
  // these through the config file.
  int replications = 100;
  double lambda = 0.5;
  int bootstrap_b = 500;
  double c = 2.0;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    spec.validate();
    if (methods.empty()) throw std::invalid_argument("experiment: no methods");
    if (alphas.empty()) throw std::invalid_argument("experiment: no alpha levels");
    for (double a : alphas)
      if (!(a > 0.0) || a >= 1.0)
        throw std::invalid_argument("experiment: alphas must lie strictly in (0, 1)");
    if (replications < 1)
      throw std::invalid_argument("experiment: replications must be positive");
    if (!(lambda >= 0.0) || lambda >= 1.0)
      throw std::invalid_argument("experiment: lambda must lie in [0, 1)");
    if (bootstrap_b < 1)
      throw std::invalid_argument("experiment: bootstrap_b must be positive");
    if (!(c > 0.0)) throw std::invalid_argument("experiment: c must be positive");
    if (threads < 1) throw std::invalid_argument("experiment: threads must be positive");
  }

  /// Documented config keys: p, n, error_model, pi1, signal_c, loading_model,
  /// calibration_file, methods, alphas, replications, lambda, bootstrap_b, c,
  /// seed. CLI flags override seed and threads afterwards.
  static ExperimentConfig from_config(const KeyValueConfig& kv) {
    ExperimentConfig cfg;
    cfg.spec.p = Index(kv.get_int("p"));
    cfg.spec.n = Index(kv.get_int("n"));
    cfg.spec.error_model = int(kv.get_int("error_model", 1));
    cfg.spec.pi1 = kv.get_double("pi1", 0.25);
    cfg.spec.signal_c = kv.get_double("signal_c", 2.0);
    const std::string loading = kv.get_string("loading_model", "uniform_appendix");
    if (loading == "uniform_appendix")
      cfg.spec.loading_model = LoadingModel::uniform_appendix;
    else if (loading == "calibrated_gaussian")
      cfg.spec.loading_model = LoadingModel::calibrated_gaussian;
    else
      throw IoError("config: unknown loading_model " + loading);
    if (kv.has("calibration_file"))
      cfg.spec.calibration =
          Calibration::from_config(KeyValueConfig::from_file(kv.get_string("calibration_file")));

    if (kv.has("methods")) {
      cfg.methods.clear();
      std::istringstream in(kv.get_string("methods"));
      std::string item;
      while (std::getline(in, item, ',')) {
        const std::size_t first = item.find_first_not_of(" \t");
        const std::size_t last = item.find_last_not_of(" \t");
        if (first == std::string::npos) continue;
        cfg.methods.push_back(method_from_string(item.substr(first, last - first + 1)));
      }
    }
    if (kv.has("alphas")) cfg.alphas = kv.get_doubles("alphas");
    cfg.replications = int(kv.get_int("replications", cfg.replications));
    cfg.lambda = kv.get_double("lambda", cfg.lambda);
    cfg.bootstrap_b = int(kv.get_int("bootstrap_b", cfg.bootstrap_b));
    cfg.c = kv.get_double("c", cfg.c);
    cfg.seed = std::uint64_t(kv.get_int("seed", 0));
    return cfg;
  }

  /// Canonical text form: feeds the provenance hash, so every field that
  /// changes results must appear here.
  std::string canonical_string() const {
    std::ostringstream out;
    out << "p=" << spec.p << ";n=" << spec.n << ";error_model=" << spec.error_model
        << ";pi1=" << spec.pi1 << ";signal_c=" << spec.signal_c << ";loading_model="
        << (spec.loading_model == LoadingModel::uniform_appendix ? "uniform" : "gaussian")
        << ";methods=";
    for (Method m : methods) out << method_name(m) << ',';
    out << ";alphas=";
    for (double a : alphas) out << a << ',';
    out << ";replications=" << replications << ";lambda=" << lambda
        << ";bootstrap_b=" << bootstrap_b << ";c=" << c << ";seed=" << seed;
    return out.str();
  }
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

/// Six significant digits, the fixed report precision.
inline std::string format_g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

struct ReplicationRecord {
  int replication = 0;
  Method method = Method::rd_a_normal;
  double alpha = 0.0;
  double fdp = 0.0;
  double fnr = 0.0;
  double tpr = 0.0;
};

struct MethodAlphaAggregate {
  Method method = Method::rd_a_normal;
  double alpha = 0.0;
  double fdr = 0.0;
  double fnr = 0.0;
  double tpr = 0.0;
  double se_fdr = 0.0;
  double se_fnr = 0.0;
  double se_tpr = 0.0;
  int reps = 0;
};

struct MetricsReport {
  std::vector<MethodAlphaAggregate> rows;  // method-major, alphas in config order
  std::vector<ReplicationRecord> raw;      // replication-major
  int replications_requested = 0;
  int failed_replications = 0;
  std::vector<std::string> failure_log;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string build_id = kBuildId;
};

namespace detail {

struct ReplicationResult {
  bool ok = false;
  std::string error;
  // fdp/fnr/tpr per (method, alpha) in config order.
  std::vector<double> fdp, fnr, tpr;
};

inline RejectionOutcome outcome_from_selection(std::vector<Index> rejected,
                                               VectorXd pvalues, double alpha) {
  RejectionOutcome out;
  out.rejected = std::move(rejected);
  out.pvalues = std::move(pvalues);
  out.alpha = alpha;
  return out;
}

/// One full replication: panel, per-method statistics, rejections at every
/// level, metrics against the generated truth.
inline ReplicationResult run_one_replication(const ExperimentConfig& cfg, int rep) {
  ReplicationResult result;
  try {
    FactorModelSpec spec = cfg.spec;
    spec.seed = cfg.seed;
    const Panel panel = gen_panel(spec, std::uint64_t(rep));
    const Index n = panel.x.rows();
    const Index p = panel.x.cols();
    const DesignMatrix design = DesignMatrix::with_factors(panel.factors);
    const MatrixXd sigma_f_hat = factor_cov(panel.factors);

    HuberConfig hcfg;
    hcfg.c = cfg.c;
    hcfg.dimension_context = std::size_t(p);

    const bool needs_huber =
        std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method m) {
          return m == Method::rd_a_normal || m == Method::rd_a_mom ||
                 m == Method::rd_a_bootstrap;
        });
    std::vector<HuberFit> huber_fits;
    if (needs_huber) {
      huber_fits.reserve(std::size_t(p));
      for (Index j = 0; j < p; ++j)
        huber_fits.push_back(fit_adaptive_huber(panel.x.col(j), design, hcfg));
    }

    for (Method method : cfg.methods) {
      // Every method ends with a rejection set per alpha; the paths differ
      // in location estimate, variance estimate, and p-value source.
      std::vector<RejectionOutcome> outcomes;
      outcomes.reserve(cfg.alphas.size());

      if (method == Method::rd_a_bootstrap) {
        BootstrapConfig bcfg;
        bcfg.num_replicates = cfg.bootstrap_b;
        bcfg.scheme = WeightScheme::exponential_unit;
        bcfg.seed = derive_seed(cfg.seed, purpose_tag("bootstrap"), std::uint32_t(rep));
        const BootstrapResult boot =
            bootstrap_pvalues(panel.x, design, huber_fits, bcfg);
        for (double alpha : cfg.alphas)
          outcomes.push_back(outcome_from_selection(
              bh_select(boot.pvalues, alpha, 1.0), boot.pvalues, alpha));
      } else {
        TestStatistics stats;
        if (method == Method::naive) {
          stats = naive_t_statistics(panel.x);
        } else if (method == Method::od_a) {
          std::vector<HuberFit> fits;
          std::vector<VarianceEstimate> vars;
          fits.reserve(std::size_t(p));
          vars.reserve(std::size_t(p));
          const double inf = std::numeric_limits<double>::infinity();
          for (Index j = 0; j < p; ++j) {
            fits.push_back(ols_fit(panel.x.col(j), design));
            vars.push_back(
                adaptive_huber_variance(panel.x.col(j), fits.back(), sigma_f_hat, inf));
          }
          stats = test_statistics(fits, vars, n, StatVariant::ols_dependence_adjusted);
        } else {
          std::vector<VarianceEstimate> vars;
          vars.reserve(std::size_t(p));
          for (Index j = 0; j < p; ++j) {
            if (method == Method::rd_a_normal) {
              vars.push_back(adaptive_huber_variance(
                  panel.x.col(j), huber_fits[std::size_t(j)], sigma_f_hat,
                  default_gamma(panel.x.col(j), cfg.c, std::size_t(p))));
            } else {
              vars.push_back(mom_variance_modified(
                  panel.x.col(j), huber_fits[std::size_t(j)], sigma_f_hat,
                  default_num_blocks(n, std::size_t(p))));
            }
          }
          const StatVariant variant = method == Method::rd_a_normal
                                          ? StatVariant::adaptive_huber
                                          : StatVariant::median_of_means;
          stats = test_statistics(huber_fits, vars, n, variant);
        }
        const VectorXd pvalues = normal_pvalues(stats);
        const double pi0 = storey_pi0(pvalues, cfg.lambda);
        for (double alpha : cfg.alphas)
          outcomes.push_back(rejection_threshold(stats, alpha, pi0, cfg.lambda));
      }

      for (const RejectionOutcome& outcome : outcomes) {
        const Metrics m = evaluate(outcome, panel.is_null);
        result.fdp.push_back(m.fdp);
        result.fnr.push_back(m.fnr);
        result.tpr.push_back(m.tpr);
      }
    }
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    result.fdp.clear();
    result.fnr.clear();
    result.tpr.clear();
  }
  return result;
}

}  // namespace detail

/// Full benchmark: replications run in a work pool writing by-index slots,
/// then a serial pass aggregates in replication order, so the report is
/// byte-identical for any thread count. More than 5 percent failed
/// replications abort the run.
inline MetricsReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  const int reps = cfg.replications;
  std::vector<detail::ReplicationResult> slots;
  slots.resize(std::size_t(reps));
  parallel_for_index(reps, cfg.threads,
                     [&](int r) { slots[std::size_t(r)] = detail::run_one_replication(cfg, r); });

  MetricsReport report;
  report.replications_requested = reps;
  report.config_hash = detail::fnv1a64(cfg.canonical_string());
  report.seed = cfg.seed;

  const std::size_t cells = cfg.methods.size() * cfg.alphas.size();
  std::vector<std::vector<double>> fdp(cells), fnr(cells), tpr(cells);

  for (int r = 0; r < reps; ++r) {
    const detail::ReplicationResult& slot = slots[std::size_t(r)];
    if (!slot.ok) {
      ++report.failed_replications;
      report.failure_log.push_back("replication " + std::to_string(r) + ": " +
                                   slot.error);
      continue;
    }
    for (std::size_t cell = 0; cell < cells; ++cell) {
      fdp[cell].push_back(slot.fdp[cell]);
      fnr[cell].push_back(slot.fnr[cell]);
      tpr[cell].push_back(slot.tpr[cell]);
      const std::size_t method_idx = cell / cfg.alphas.size();
      const std::size_t alpha_idx = cell % cfg.alphas.size();
      ReplicationRecord rec;
      rec.replication = r;
      rec.method = cfg.methods[method_idx];
      rec.alpha = cfg.alphas[alpha_idx];
      rec.fdp = slot.fdp[cell];
      rec.fnr = slot.fnr[cell];
      rec.tpr = slot.tpr[cell];
      report.raw.push_back(rec);
    }
  }

  if (double(report.failed_replications) > 0.05 * double(reps)) {
    std::string detail_msg;
    for (std::size_t i = 0; i < report.failure_log.size() && i < 3; ++i)
      detail_msg += "\n  " + report.failure_log[i];
    throw std::runtime_error(
        "experiment aborted: " + std::to_string(report.failed_replications) + " of " +
        std::to_string(reps) + " replications failed" + detail_msg);
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / double(v.size());
  };
  // Standard error of the mean; zero when one replication survives.
  auto se_of = [&](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / double(v.size() - 1)) / std::sqrt(double(v.size()));
  };

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
      const std::size_t cell = mi * cfg.alphas.size() + ai;
      MethodAlphaAggregate agg;
      agg.method = cfg.methods[mi];
      agg.alpha = cfg.alphas[ai];
      agg.reps = int(fdp[cell].size());
      agg.fdr = mean_of(fdp[cell]);
      agg.fnr = mean_of(fnr[cell]);
      agg.tpr = mean_of(tpr[cell]);
      agg.se_fdr = se_of(fdp[cell], agg.fdr);
      agg.se_fnr = se_of(fnr[cell], agg.fnr);
      agg.se_tpr = se_of(tpr[cell], agg.tpr);
      report.rows.push_back(agg);
    }
  }
  return report;
}

/// Aggregate table in the fixed CSV schema.
inline std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "method,alpha,fdr,fnr,tpr,se_fdr,se_fnr,se_tpr,reps,failed\n";
  for (const MethodAlphaAggregate& row : report.rows) {
    out << method_name(row.method) << ',' << detail::format_g6(row.alpha) << ','
        << detail::format_g6(row.fdr) << ',' << detail::format_g6(row.fnr) << ','
        << detail::format_g6(row.tpr) << ',' << detail::format_g6(row.se_fdr) << ','
        << detail::format_g6(row.se_fnr) << ',' << detail::format_g6(row.se_tpr) << ','
        << row.reps << ',' << report.failed_replications << '\n';
  }
  return out.str();
}

/// Per-replication raw metrics, persisted next to every aggregate report so
/// the aggregation can be audited.
inline std::string report_raw_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "replication,method,alpha,fdp,fnr,tpr\n";
  for (const ReplicationRecord& rec : report.raw) {
    out << rec.replication << ',' << method_name(rec.method) << ','
        << detail::format_g6(rec.alpha) << ',' << detail::format_g6(rec.fdp) << ','
        << detail::format_g6(rec.fnr) << ',' << detail::format_g6(rec.tpr) << '\n';
  }
  return out.str();
}

/// Same table as JSON with a provenance block; emitted by hand with fixed
/// key order and the fixed precision, so bytes are reproducible.
inline std::string report_to_json(const MetricsReport& report) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"provenance\": {\n";
  out << "    \"build\": \"" << report.build_id << "\",\n";
  out << "    \"config_hash\": \"" << detail::hex64(report.config_hash) << "\",\n";
  out << "    \"seed\": " << report.seed << "\n";
  out << "  },\n";
  out << "  \"replications\": {\n";
  out << "    \"requested\": " << report.replications_requested << ",\n";
  out << "    \"failed\": " << report.failed_replications << "\n";
  out << "  },\n";
  out << "  \"rows\": [";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const MethodAlphaAggregate& row = report.rows[i];
    out << (i ? ",\n    " : "\n    ");
    out << "{\"method\": \"" << method_name(row.method) << "\", "
        << "\"alpha\": " << detail::format_g6(row.alpha) << ", "
        << "\"fdr\": " << detail::format_g6(row.fdr) << ", "
        << "\"fnr\": " << detail::format_g6(row.fnr) << ", "
        << "\"tpr\": " << detail::format_g6(row.tpr) << ", "
        << "\"se_fdr\": " << detail::format_g6(row.se_fdr) << ", "
        << "\"se_fnr\": " << detail::format_g6(row.se_fnr) << ", "
        << "\"se_tpr\": " << detail::format_g6(row.se_tpr) << ", "
        << "\"reps\": " << row.reps << "}";
  }
  out << "\n  ]\n}\n";
  return out.str();
}

/// Writes the aggregate report (csv or json) at `path` and the per-replication
/// raw table at `path + ".reps.csv"`.
inline void emit_report(const MetricsReport& report, const std::string& format,
                        const std::string& path) {
  std::string body;
  if (format == "csv") body = report_to_csv(report);
  else if (format == "json") body = report_to_json(report);
  else throw std::invalid_argument("emit_report: format must be csv or json");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write report: " + path);
  out << body;
  if (!out) throw IoError("failed while writing report: " + path);

  const std::string raw_path = path + ".reps.csv";
  std::ofstream raw(raw_path, std::ios::binary);
  if (!raw) throw IoError("cannot write report: " + raw_path);
  raw << report_raw_to_csv(report);
  if (!raw) throw IoError("failed while writing report: " + raw_path);
}

struct Figure1Config {
  std::uint64_t seed = 0;
  Index count = 10000;
  Index n = 30;
  // Bandwidth rule inputs for the per-row robust location.
  double c = 1.0;
  std::size_t dimension_context = 1;
};

struct Figure1Result {
  double bin_lo = -6.0;
  double bin_hi = 6.0;
  double bin_width = 0.25;
  std::vector<int> robust_bins;
  std::vector<int> mean_bins;
  int robust_below = 0, robust_above = 0;
  int mean_below = 0, mean_above = 0;
  // Counts outside [-3, 3]; about 27 per 10000 under exact normality.
  int robust_outside = 0;
  int mean_outside = 0;
  Index count = 0;
  Index n = 0;
  std::uint64_t seed = 0;
};

/// Histogram comparison of the scaled robust location against the scaled
/// sample mean over many short heavy-tailed samples.
inline Figure1Result figure1_experiment(const Figure1Config& cfg) {
  if (cfg.count < 1 || cfg.n < 2)
    throw std::invalid_argument("figure1: count >= 1 and n >= 2 required");
  RngStream rng(cfg.seed, "figure1", 0, 0);
  const MatrixXd sample = gen_figure1_sample(cfg.n, cfg.count, rng);
  const DesignMatrix design = DesignMatrix::intercept_only(cfg.n);
  HuberConfig hcfg;
  hcfg.c = cfg.c;
  hcfg.dimension_context = cfg.dimension_context;

  Figure1Result result;
  result.count = cfg.count;
  result.n = cfg.n;
  result.seed = cfg.seed;
  const int bins = int(std::lround((result.bin_hi - result.bin_lo) / result.bin_width));
  result.robust_bins.assign(std::size_t(bins), 0);
  result.mean_bins.assign(std::size_t(bins), 0);

  const double root_n = std::sqrt(double(cfg.n));
  auto tally = [&](double v, std::vector<int>& hist, int& below, int& above,
                   int& outside) {
    if (std::abs(v) > 3.0) ++outside;
    if (v < result.bin_lo) {
      ++below;
    } else if (v >= result.bin_hi) {
      ++above;
    } else {
      const int idx = int((v - result.bin_lo) / result.bin_width);
      ++hist[std::size_t(std::min(idx, bins - 1))];
    }
  };

  for (Index r = 0; r < cfg.count; ++r) {
    const VectorXd row = sample.row(r).transpose();
    const HuberFit fit = fit_adaptive_huber(row, design, hcfg);
    tally(root_n * fit.mu_hat, result.robust_bins, result.robust_below,
          result.robust_above, result.robust_outside);
    tally(root_n * row.mean(), result.mean_bins, result.mean_below,
          result.mean_above, result.mean_outside);
  }
  return result;
}

/// Figure CSV: one `bin` row per histogram cell, then out-of-range and
/// outside-band tallies. The lo/hi of a tally row name the interval the
/// count refers to.
inline std::string figure1_to_csv(const Figure1Result& result) {
  std::ostringstream out;
  out << "row_type,lo,hi,robust,mean\n";
  for (std::size_t b = 0; b < result.robust_bins.size(); ++b) {
    const double lo = result.bin_lo + double(b) * result.bin_width;
    const double hi = lo + result.bin_width;
    out << "bin," << detail::format_g6(lo) << ',' << detail::format_g6(hi) << ','
        << result.robust_bins[b] << ',' << result.mean_bins[b] << '\n';
  }
  out << "below_range,-inf," << detail::format_g6(result.bin_lo) << ','
      << result.robust_below << ',' << result.mean_below << '\n';
  out << "above_range," << detail::format_g6(result.bin_hi) << ",inf,"
      << result.robust_above << ',' << result.mean_above << '\n';
  out << "outside_band,-3,3," << result.robust_outside << ',' << result.mean_outside
      << '\n';
  return out.str();
}

inline std::string figure1_to_json(const Figure1Result& result) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"provenance\": {\"build\": \"" << kBuildId
      << "\", \"seed\": " << result.seed << "},\n";
  out << "  \"count\": " << result.count << ",\n";
  out << "  \"n\": " << result.n << ",\n";
  out << "  \"bin_lo\": " << detail::format_g6(result.bin_lo) << ",\n";
  out << "  \"bin_width\": " << detail::format_g6(result.bin_width) << ",\n";
  out << "  \"robust_bins\": [";
  for (std::size_t b = 0; b < result.robust_bins.size(); ++b)
    out << (b ? "," : "") << result.robust_bins[b];
  out << "],\n";
  out << "  \"mean_bins\": [";
  for (std::size_t b = 0; b < result.mean_bins.size(); ++b)
    out << (b ? "," : "") << result.mean_bins[b];
  out << "],\n";
  out << "  \"robust_below\": " << result.robust_below << ",\n";
  out << "  \"robust_above\": " << result.robust_above << ",\n";
  out << "  \"mean_below\": " << result.mean_below << ",\n";
  out << "  \"mean_above\": " << result.mean_above << ",\n";
  out << "  \"robust_outside\": " << result.robust_outside << ",\n";
  out << "  \"mean_outside\": " << result.mean_outside << "\n";
  out << "}\n";
  return out.str();
}

}  // namespace robustfdp
