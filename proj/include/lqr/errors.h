#pragma once

#include <stdexcept>
#include <string>

namespace lqr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input shapes do not line up.
struct DimensionError : Error {
  using Error::Error;
};

// Problem data violate the standing assumptions: definiteness of the weights,
// stabilizability, or detectability.
struct AssumptionError : Error {
  using Error::Error;
};

// A matrix that must be Hurwitz is not. Carries the offending spectral abscissa.
struct StabilityError : Error {
  StabilityError(const std::string& what, double abscissa_)
      : Error(what), abscissa(abscissa_) {}
  double abscissa;
};

struct NumericalError : Error {
  using Error::Error;
};

// Spectrum too close to the imaginary axis for a reliable invariant-subspace split.
struct IllConditionedError : NumericalError {
  using NumericalError::NumericalError;
};

// Rejection sampling could not reach the requested acceptance rate.
struct SamplingError : Error {
  using Error::Error;
};

// The lifted coordinate X is singular, so the change of variables is undefined there.
struct SingularLiftError : Error {
  using Error::Error;
};

}  // namespace lqr
