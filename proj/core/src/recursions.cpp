#include "blinddf/recursions.hpp"

namespace blinddf::rls {

CVec inverse_update(CMat& p_inv, const CVec& x, double alpha) {
  // p_inv is Hermitian, so x^H P^{-1} = (P^{-1} x)^H. The rank-one update is
  // written into the lower triangle and mirrored, which keeps p_inv exactly
  // Hermitian.
  const CVec u = p_inv * x;
  const double denom = alpha + x.dot(u).real();
  const double s = 1.0 / denom;
  const double ia = 1.0 / alpha;
  const Eigen::Index n = p_inv.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx uj = std::conj(u[j]) * s;
    p_inv(j, j) = cplx((p_inv(j, j).real() - (u[j] * uj).real()) * ia, 0.0);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const cplx v = (p_inv(i, j) - u[i] * uj) * ia;
      p_inv(i, j) = v;
      p_inv(j, i) = std::conj(v);
    }
  }
  return u * s;
}

void projected_inverse_update(CMat& x_inv, const CVec& g, double alpha) {
  const double beta = 1.0 - alpha;
  const CVec u = x_inv * g;
  const cplx denom = beta * beta / alpha + beta * g.dot(u);
  x_inv = (x_inv / beta - (u * u.adjoint()) / denom).eval();
  symmetrize(x_inv);
}

}  // namespace blinddf::rls
