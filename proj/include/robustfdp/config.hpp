#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "robustfdp/errors.hpp"

namespace robustfdp {

/// Flat key-value configuration: one `key = value` pair per line, full-line
/// or trailing comments with '#', blank lines ignored. Later keys override
/// earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str(), path);
  }

  static KeyValueConfig from_text(const std::string& text,
                                  const std::string& origin = "<text>") {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw IoError(origin + ":" + std::to_string(line_no) +
                      ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty())
        throw IoError(origin + ":" + std::to_string(line_no) + ": empty key");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw IoError(origin_ + ": missing key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long long get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(raw, &pos);
    } catch (const std::exception&) {
      throw IoError(origin_ + ": key '" + key + "' is not an integer: " + raw);
    }
    if (pos != raw.size())
      throw IoError(origin_ + ": key '" + key + "' is not an integer: " + raw);
    return v;
  }

  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  /// Comma-separated list of doubles.
  std::vector<double> get_doubles(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::string item;
    std::istringstream in(raw);
    while (std::getline(in, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw IoError(origin_ + ": key '" + key + "' has no values");
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

 private:
  static std::string trim(const std::string& s) {
    const std::size_t first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const std::size_t last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
  }

  double parse_double(const std::string& key, const std::string& raw) const {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(raw, &pos);
    } catch (const std::exception&) {
      throw IoError(origin_ + ": key '" + key + "' is not a number: " + raw);
    }
    if (pos != raw.size())
      throw IoError(origin_ + ": key '" + key + "' is not a number: " + raw);
    return v;
  }

  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace robustfdp
