#pragma once

#include <stdexcept>
#include <string>

namespace mfcnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad inputs: wrong shapes, negative variances, unknown names.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class NumericOverflowError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations);
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

// Iterates ran off to infinity; there is no finite fixed point.
class DivergenceError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

class BracketError : public Error {
 public:
  BracketError(const std::string& what, double lo, double hi);
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_, hi_;
};

}  // namespace mfcnn
