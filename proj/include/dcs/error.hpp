#pragma once

#include <stdexcept>
#include <string>

namespace dcs {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector/matrix shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A parameter or config value is outside its legal domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Inputs are legal in shape but make the requested quantity undefined,
// e.g. an SN-ratio estimate from two identical vectors.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A backward pass was given a cache produced by different parameters.
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

// Training produced non-finite parameters.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int last_good_epoch)
      : Error(what), last_good_epoch_(last_good_epoch) {}

  // Last epoch whose parameters were entirely finite (0 = initial params).
  int last_good_epoch() const noexcept { return last_good_epoch_; }

 private:
  int last_good_epoch_;
};

}  // namespace dcs
