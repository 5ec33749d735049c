#pragma once

#include <doctest.h>

#include "blinddf/rng.hpp"
#include "blinddf/types.hpp"

namespace blinddf::test {

inline CVec random_cvec(Rng& rng, Eigen::Index n, double var = 1.0) {
  CVec v(n);
  for (auto& x : v) x = complex_gaussian(rng, var);
  return v;
}

inline CMat random_cmat(Rng& rng, Eigen::Index r, Eigen::Index c) {
  CMat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) m.col(j) = random_cvec(rng, r);
  return m;
}

/// Random Hermitian positive definite matrix with eigenvalues in [lo, lo + 1 + n].
inline CMat random_hpd(Rng& rng, Eigen::Index n, double lo = 0.5) {
  const CMat a = random_cmat(rng, n, n);
  return a * a.adjoint() + lo * CMat::Identity(n, n);
}

inline RVec random_bipolar_vec(Rng& rng, Eigen::Index n) {
  RVec v(n);
  for (auto& x : v) x = random_bipolar(rng);
  return v;
}

inline double rel_err(const CMat& a, const CMat& b) { return (a - b).norm() / b.norm(); }

}  // namespace blinddf::test
