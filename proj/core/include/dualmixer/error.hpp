#pragma once

#include <stdexcept>
#include <string>

namespace dualmixer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A zero-norm vector was passed where a direction is required.
class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. The message carries the source name and line.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Too few eligible windows to draw the requested negatives.
class ShortSeriesError : public Error {
 public:
  using Error::Error;
};

/// Invalid run or model configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dualmixer
