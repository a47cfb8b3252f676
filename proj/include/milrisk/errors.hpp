#pragma once

#include <stdexcept>
#include <string>

namespace milrisk {

// Error hierarchy. The CLI maps these onto process exit codes:
//   ConfigError / FormatError / IoError -> 2
//   ContractError / ShapeError / EstimatorUndefined -> 3
//   NumericAbort -> 4
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Raised when the negative-bag mass is zero and the unbiased estimator has no
// denominator.
class EstimatorUndefined : public ContractError {
 public:
  using ContractError::ContractError;
};

class UnsupportedGradient : public ContractError {
 public:
  using ContractError::ContractError;
};

class NumericAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace milrisk
