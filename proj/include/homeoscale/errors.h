#pragma once

#include <stdexcept>
#include <string>

namespace homeoscale {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: config keys, schedules, parameter invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a model equation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Time went backwards.
class OrderingError : public Error {
 public:
  using Error::Error;
};

// Two-point neuron calibration has no physical solution.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Locked region requires finite hysteresis.
class UndefinedPeriodError : public Error {
 public:
  using Error::Error;
};

}  // namespace homeoscale
