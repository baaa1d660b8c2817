#pragma once

#include <stdexcept>
#include <string>

namespace gmtl {

// Base of everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller handed us something that violates a documented precondition
// (shape mismatch, bad flag value, out-of-range index, ...).
struct InvalidInput : Error {
  using Error::Error;
};

// A file, line, or checkpoint could not be read or failed validation.
struct DataError : Error {
  using Error::Error;
};

// A NaN/Inf guard tripped during training or evaluation.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace gmtl
