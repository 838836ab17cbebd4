#pragma once

#include <stdexcept>
#include <string>

namespace rigidflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs whose rasters or sequences do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Alignment region is empty.
class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

// Too few or (near) collinear points for a rigid fit.
class SingularConfigurationError : public Error {
 public:
  using Error::Error;
};

// Malformed file content or configuration text.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Failure opening, reading or writing a file.
class IoError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Requested (loss, input) pair has no analytic gradient.
class UnsupportedGradientError : public Error {
 public:
  using Error::Error;
};

}  // namespace rigidflow
