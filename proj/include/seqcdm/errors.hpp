#ifndef SEQCDM_ERRORS_HPP
#define SEQCDM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace seqcdm {

/// Invalid user configuration (bad field values, unsupported combinations).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent data (dimensions, non-binary entries, file I/O).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sampler produced a non-finite state; carries the iteration index.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

}  // namespace seqcdm

#endif  // SEQCDM_ERRORS_HPP
