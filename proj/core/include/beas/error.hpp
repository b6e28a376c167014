#pragma once

#include <stdexcept>
#include <string>

namespace beas {

// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape, fingerprint, or precondition violations on caller-supplied values.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Overflow / NaN during training. Carries the index of the layer that first
// produced a non-finite value (0-based over weight layers; -1 for the loss).
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int layer)
      : Error(what), layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

// Experiment or defense configuration that cannot be executed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed dataset or ledger file.
class IngestionError : public Error {
 public:
  using Error::Error;
};

}  // namespace beas
