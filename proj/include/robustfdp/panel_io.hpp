#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "robustfdp/datagen.hpp"
#include "robustfdp/errors.hpp"

namespace robustfdp {

namespace detail {

/// Shortest decimal that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double_field(const std::string& raw, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(raw, &pos);
  } catch (const std::exception&) {
    throw IoError("panel file: bad number in " + where + ": " + raw);
  }
  if (pos != raw.size())
    throw IoError("panel file: bad number in " + where + ": " + raw);
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) fields.push_back(item);
  return fields;
}

}  // namespace detail

/// Panel file layout, one section per line group:
///   robustfdp-panel,1
///   meta,<p>,<n>,<K>,<error_model>,<pi1>,<signal_c>,<seed>,<loading_model>
///   j,mu_true            followed by p rows of "j,value"
///   X                    followed by n rows of p comma-joined observations
///   F                    followed by n rows of K comma-joined factors
/// Doubles are written with enough digits to round-trip exactly, so a
/// save/load/save cycle is byte-identical. Calibration matrices are not
/// serialized; a loaded panel's spec echo carries the shipped defaults.
inline void save_panel(const Panel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write panel file: " + path);

  const Index p = panel.x.cols();
  const Index n = panel.x.rows();
  const Index k = panel.factors.cols();
  out << "robustfdp-panel,1\n";
  out << "meta," << p << ',' << n << ',' << k << ',' << panel.spec.error_model << ','
      << detail::format_double(panel.spec.pi1) << ','
      << detail::format_double(panel.spec.signal_c) << ',' << panel.spec.seed << ','
      << (panel.spec.loading_model == LoadingModel::uniform_appendix
              ? "uniform_appendix"
              : "calibrated_gaussian")
      << '\n';
  out << "j,mu_true\n";
  for (Index j = 0; j < p; ++j)
    out << j << ',' << detail::format_double(panel.mu_true[j]) << '\n';
  out << "X\n";
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (j) out << ',';
      out << detail::format_double(panel.x(i, j));
    }
    out << '\n';
  }
  out << "F\n";
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < k; ++l) {
      if (l) out << ',';
      out << detail::format_double(panel.factors(i, l));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing panel file: " + path);
}

inline Panel load_panel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open panel file: " + path);

  std::string line;
  if (!std::getline(in, line) || line != "robustfdp-panel,1")
    throw IoError("panel file: unrecognized header in " + path);
  if (!std::getline(in, line)) throw IoError("panel file: missing meta line");
  const std::vector<std::string> meta = detail::split_csv(line);
  if (meta.size() != 9 || meta[0] != "meta")
    throw IoError("panel file: malformed meta line");

  Panel panel;
  const long long p = std::stoll(meta[1]);
  const long long n = std::stoll(meta[2]);
  const long long k = std::stoll(meta[3]);
  if (p < 1 || n < 1 || k < 1) throw IoError("panel file: bad dimensions");
  panel.spec.p = p;
  panel.spec.n = n;
  panel.spec.num_factors = int(k);
  panel.spec.error_model = int(std::stoll(meta[4]));
  panel.spec.pi1 = detail::parse_double_field(meta[5], "meta pi1");
  panel.spec.signal_c = detail::parse_double_field(meta[6], "meta signal_c");
  panel.spec.seed = std::stoull(meta[7]);
  if (meta[8] == "uniform_appendix")
    panel.spec.loading_model = LoadingModel::uniform_appendix;
  else if (meta[8] == "calibrated_gaussian")
    panel.spec.loading_model = LoadingModel::calibrated_gaussian;
  else
    throw IoError("panel file: unknown loading model " + meta[8]);

  if (!std::getline(in, line) || line != "j,mu_true")
    throw IoError("panel file: missing mean section header");
  panel.mu_true.resize(p);
  for (long long j = 0; j < p; ++j) {
    if (!std::getline(in, line)) throw IoError("panel file: truncated mean section");
    const std::vector<std::string> fields = detail::split_csv(line);
    if (fields.size() != 2 || std::stoll(fields[0]) != j)
      throw IoError("panel file: malformed mean row " + std::to_string(j));
    panel.mu_true[j] = detail::parse_double_field(fields[1], "mu_true");
  }
  panel.is_null.assign(std::size_t(p), true);
  for (long long j = 0; j < p; ++j) panel.is_null[std::size_t(j)] = panel.mu_true[j] == 0.0;

  if (!std::getline(in, line) || line != "X")
    throw IoError("panel file: missing observation section");
  panel.x.resize(n, p);
  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw IoError("panel file: truncated observations");
    const std::vector<std::string> fields = detail::split_csv(line);
    if (Index(fields.size()) != p)
      throw IoError("panel file: observation row " + std::to_string(i) +
                    " has wrong width");
    for (long long j = 0; j < p; ++j)
      panel.x(i, j) = detail::parse_double_field(fields[std::size_t(j)], "X");
  }

  if (!std::getline(in, line) || line != "F")
    throw IoError("panel file: missing factor section");
  panel.factors.resize(n, k);
  for (long long i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw IoError("panel file: truncated factors");
    const std::vector<std::string> fields = detail::split_csv(line);
    if (Index(fields.size()) != k)
      throw IoError("panel file: factor row " + std::to_string(i) + " has wrong width");
    for (long long l = 0; l < k; ++l)
      panel.factors(i, l) = detail::parse_double_field(fields[std::size_t(l)], "F");
  }
  return panel;
}

}  // namespace robustfdp
