#pragma once

#include <stdexcept>
#include <string>

namespace pacoh {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures map to exit code 3 in the CLI.
struct NumericalError : Error {
  using Error::Error;
};

struct NotPositiveDefinite : NumericalError {
  using NumericalError::NumericalError;
};
struct DivergenceDetected : NumericalError {
  using NumericalError::NumericalError;
};
struct OutOfValidityWindow : NumericalError {
  using NumericalError::NumericalError;
};
struct EffectiveSampleSizeTooLow : NumericalError {
  using NumericalError::NumericalError;
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct EmptyInput : Error {
  using Error::Error;
};
struct EmptyPool : Error {
  using Error::Error;
};
struct InvalidRange : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace pacoh
