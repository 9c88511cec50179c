#pragma once

#include <stdexcept>
#include <string>

namespace rdsel {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value or an operation used outside its contract.
struct ConfigError : Error {
  using Error::Error;
};

// Shape mismatch between matrices, networks or feature bundles.
struct DimensionError : Error {
  using Error::Error;
};

// Bad input data (labels out of range, negative distances, ...).
struct DataError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericalError : Error {
  using Error::Error;
};

// Malformed input file; message carries the line number.
struct ParseError : Error {
  using Error::Error;
};

// Input too large for an exact method.
struct SizeError : Error {
  using Error::Error;
};

// File system failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace rdsel
