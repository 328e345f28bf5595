#pragma once

#include <stdexcept>
#include <string>

namespace driftscope {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or unknown configuration value (e.g. an unknown flow name).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked on the wrong kind of object (e.g. velocity of a flow map).
class FlowKindError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the documented domain of an operation.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Data violating a structural invariant (non-monotone times, NaN positions).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Unrecognized file layout (bad magic, unsupported version, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File whose layout is recognized but whose content is inconsistent.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Kernel rows without any landmark affinity.
class ConnectivityError : public Error {
 public:
  using Error::Error;
};

/// Kernel graph splits into several components; diffusion distances between
/// components are undefined.
class MultiComponentError : public Error {
 public:
  using Error::Error;
};

/// Covariance neighborhood too small to span the spatial dimension.
class DegenerateNeighborhoodError : public Error {
 public:
  using Error::Error;
};

/// Iterative eigensolver did not reach the requested tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace driftscope
