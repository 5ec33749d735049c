#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace blinddf {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Boolean K x K feedback mask: entry (k, j) true when user k may cancel user j.
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid parameters, malformed config files and bad CLI input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (singular statistics, NaN) in an estimator.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// sgn with the tie at zero resolved to +1.
inline double hard_decision(double x) { return x >= 0.0 ? 1.0 : -1.0; }

/// Force exact Hermitian symmetry in place.
inline void symmetrize(CMat& m) {
  m = (0.5 * (m + m.adjoint())).eval();
}

inline bool all_finite(const CMat& m) { return m.allFinite(); }

}  // namespace blinddf
