#pragma once

#include <stdexcept>
#include <string>

namespace oisnet {

// Invalid model parameters or configuration. The CLI maps this to exit code 2.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A sampler produced a non-finite or otherwise impossible value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or inconsistent input data (paths, files, schemas).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oisnet
