#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace rfadapt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error hierarchy. Every failure raised by the library derives from Error so
// callers (the CLI in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument: dimension mismatch, out-of-range scalar.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration (kernel, benchmark, experiment).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical solve failed or did not meet its residual target.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Out-of-order append to an append-only time series.
class SequencingError : public Error {
 public:
  using Error::Error;
};

/// Mirror-map inverse left the representable range.
class SaturationError : public Error {
 public:
  using Error::Error;
};

/// Two bodies closer than the configured floor.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for the requested variant.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw ArgumentError(std::string(what) + ": expected dimension " + std::to_string(want) +
                        ", got " + std::to_string(got));
  }
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace detail

}  // namespace rfadapt
