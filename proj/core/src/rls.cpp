#include <cmath>

#include "blinddf/adaptrx.hpp"
#include "blinddf/recursions.hpp"
#include "receiver_detail.hpp"

namespace blinddf::adaptrx {

namespace {

void hold_masked_block(ReceiverState& s) {
  for (int j = 0; j < s.K; ++j) {
    if (s.mask[j]) continue;
    s.i_inv.row(j).setZero();
    s.i_inv.col(j).setZero();
    s.i_inv(j, j) = s.params.delta;
  }
}

// Constrained feedforward solution for normalized statistics:
//   w = Rn^{-1} y - Rn^{-1} C (C^H Rn^{-1} C)^{-1} (C^H Rn^{-1} y - target)
// with Rn^{-1} = r_inv / (1 - alpha) and (C^H Rn^{-1} C)^{-1} = (1 - alpha) gamma.
CVec assemble_w(const ReceiverState& s, const CVec& y, const CVec& target) {
  const double beta = 1.0 - s.params.alpha;
  const CVec a = (s.acc.r_inv * y) / beta;
  const CVec lam = s.acc.gamma * (s.acc.bound_cc.adjoint() * a - target);
  return a - s.acc.r_inv_c * lam;
}

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

cplx ccm_rls_step(ReceiverState& s, const CVec& r, const RVec& b_hat, const CVec& h_hat) {
  detail::check_inputs(s, r, b_hat, h_hat);
  const cplx z = soft_output(s, r, b_hat);
  if (!finite(z)) {
    reset(s);
    ++s.divergence_resets;
    return z;
  }
  const double alpha = s.params.alpha;
  const double beta = 1.0 - alpha;
  const cplx zc = std::conj(z);

  s.acc.update(r, z);
  s.acc.refresh(s.C);
  s.d = alpha * s.d + (beta * zc) * r;

  const bool fb = s.has_feedback();
  if (fb) {
    const CVec bm = detail::masked(s, b_hat).cast<cplx>();
    rls::inverse_update(s.i_inv, zc * bm, alpha);
    hold_masked_block(s);
    s.t = alpha * s.t + (beta * std::norm(z)) * (r * bm.transpose());
    s.v = alpha * s.v + (beta * zc) * bm;
  }

  const CVec y = fb ? CVec(s.d + s.t * s.f) : s.d;
  s.w = assemble_w(s, y, s.params.nu * h_hat);
  if (fb) {
    s.f = (s.i_inv / beta) * (s.t.adjoint() * s.w - s.v);
  }
  detail::apply_mask(s);
  ++s.steps;
  detail::guard(s);
  return z;
}

cplx cmv_rls_step(ReceiverState& s, const CVec& r, const RVec& b_hat, const CVec& h_hat) {
  detail::check_inputs(s, r, b_hat, h_hat);
  const cplx z = soft_output(s, r, b_hat);
  if (!finite(z)) {
    reset(s);
    ++s.divergence_resets;
    return z;
  }
  const double alpha = s.params.alpha;
  const double beta = 1.0 - alpha;

  // Running disagreement between this user's linear decision and the final
  // decision supplied in b_hat; B is replaced by I while it stays small.
  const double lin = hard_decision(s.w.dot(r).real());
  const double miss = lin != b_hat[s.user] ? 1.0 : 0.0;
  s.unreliability = alpha * s.unreliability + beta * miss;
  s.b_identity_active = s.unreliability < s.params.b_identity_threshold;

  s.acc.update(r, z);
  s.acc.refresh(s.C);

  const bool fb = s.has_feedback();
  if (fb) {
    const CVec bm = detail::masked(s, b_hat).cast<cplx>();
    rls::inverse_update(s.i_inv, bm, alpha);
    hold_masked_block(s);
    s.t = alpha * s.t + beta * (r * bm.transpose());
  }

  const CVec y = fb ? CVec(s.t * s.f) : CVec::Zero(s.M);
  s.w = assemble_w(s, y, h_hat);
  if (fb) {
    const CVec tw = s.t.adjoint() * s.w;
    s.f = s.b_identity_active ? tw : CVec((s.i_inv / beta) * tw);
  }
  detail::apply_mask(s);
  ++s.steps;
  detail::guard(s);
  return z;
}

}  // namespace blinddf::adaptrx
