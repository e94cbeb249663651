#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace amcckf {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map failures to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values produced by a process model.
class PropagationError : public Error {
 public:
  PropagationError(const std::string& what, long index)
      : Error(what), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

// A measurement that cannot be used (non-finite, wrong size).
class MeasurementRejected : public Error {
 public:
  using Error::Error;
};

// Noise statistics are not yet available (zero degrees of freedom, empty
// window). Callers keep their previous noise estimates.
class AdaptationNotReady : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or arguments supplied by a user.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (dataset rows, event ordering).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace amcckf
