#pragma once

#include <stdexcept>
#include <string>

namespace bosefold {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidDimension : Error {
  using Error::Error;
};

struct InvalidInput : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NonOrthonormalModes : Error {
  using Error::Error;
};

struct InconsistentModes : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct OutOfRange : Error {
  using Error::Error;
};

struct NumericalFailure : Error {
  using Error::Error;
};

}  // namespace bosefold
