#pragma once

#include <stdexcept>
#include <string>

namespace dadin {

// Root of every error raised by the library. The C API maps each subclass to
// one status code, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of operands do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input that has no meaningful result (empty list, all entries masked, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// API used out of order, e.g. backward on a non-scalar or stepping without gradients.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class NotApplicableError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dadin
