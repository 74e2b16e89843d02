#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace safer {

/// Malformed or empty input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A row of a delimiter-separated file could not be parsed.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid parameters or inconsistent configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A cached quantity was used after the data it summarizes changed.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-finite values, failed factorizations.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training objective blew past the divergence threshold.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, int epoch, double objective)
      : NumericalError(what), epoch_(epoch), objective_(objective) {}
  int epoch() const noexcept { return epoch_; }
  double objective() const noexcept { return objective_; }

 private:
  int epoch_;
  double objective_;
};

}  // namespace safer
