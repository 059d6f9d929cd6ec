#pragma once

#include <stdexcept>
#include <string>

namespace robustfdp {

/// The design matrix has linearly dependent columns.
class RankDeficientDesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few residuals fall inside the clipping bandwidth to make progress.
/// The remedy is a larger robustification parameter.
class DegenerateScaleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The data carry no usable dispersion (for example an all-zero column).
class DegenerateDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough observations for the requested procedure.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be read, written, or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robustfdp
