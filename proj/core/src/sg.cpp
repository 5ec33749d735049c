#include <cmath>

#include "blinddf/adaptrx.hpp"
#include "receiver_detail.hpp"

namespace blinddf::adaptrx {

StepSizes ccm_sg_stepsizes(cplx z, double e, double r_p_r, double b_b, double mu0_w,
                           double mu0_f, bool has_feedback) {
  const double az = std::abs(z);
  const StepSizes fallback{mu0_w, has_feedback ? mu0_f : 0.0, true};
  // a = mu_w |z| e rPr and c = mu_f |z| e bb solve a = mu0_w (|z| + 1 - c),
  // c = mu0_f (|z| + 1 - a); without feedback c = 0.
  const double g0 = az + 1.0;
  double a = mu0_w * g0;
  double c = 0.0;
  StepSizes out;
  if (has_feedback) {
    const double den = 1.0 - mu0_w * mu0_f;
    if (!(std::abs(den) >= kStepDenominatorFloor)) return fallback;
    a = mu0_w * g0 * (1.0 - mu0_f) / den;
    c = mu0_f * g0 * (1.0 - mu0_w) / den;
    const double den_f = az * e * b_b;
    if (!(std::abs(den_f) >= kStepDenominatorFloor)) return fallback;
    out.mu_f = c / den_f;
  }
  const double den_w = az * e * r_p_r;
  if (!(std::abs(den_w) >= kStepDenominatorFloor)) return fallback;
  out.mu_w = a / den_w;
  return out;
}

StepSizes cmv_sg_stepsizes(double r_p_r, double b_b, double mu0_w, double mu0_f,
                           double prev_mu_w, bool has_feedback) {
  const StepSizes fallback{mu0_w, has_feedback ? mu0_f : 0.0, true};
  StepSizes out;
  if (has_feedback) {
    if (!(std::abs(b_b) >= kStepDenominatorFloor)) return fallback;
    out.mu_f = mu0_f * (1.0 - prev_mu_w * r_p_r) / b_b;
  }
  if (!(std::abs(r_p_r) >= kStepDenominatorFloor)) return fallback;
  out.mu_w = mu0_w * (1.0 - out.mu_f * b_b) / r_p_r;
  return out;
}

namespace {

// Shared SG body; `ccm` selects the CM error weighting e = |z|^2 - 1.
cplx sg_step(ReceiverState& s, const CVec& r, const RVec& b_hat, const CVec& h_hat, bool ccm) {
  detail::check_inputs(s, r, b_hat, h_hat);
  const cplx z = soft_output(s, r, b_hat);
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    reset(s);
    ++s.divergence_resets;
    return z;
  }
  s.acc.update(r, z);
  s.acc.refresh(s.C);

  const RVec bm = detail::masked(s, b_hat);
  const bool fb = s.has_feedback();
  const double e = ccm ? std::norm(z) - 1.0 : 1.0;
  const CVec pr = s.proj.P * r;
  const double r_p_r = r.dot(pr).real();
  const double b_b = bm.squaredNorm();

  StepSizes mu{s.params.mu0_w, fb ? s.params.mu0_f : 0.0, false};
  if (s.params.normalized_steps) {
    mu = ccm ? ccm_sg_stepsizes(z, e, r_p_r, b_b, s.params.mu0_w, s.params.mu0_f, fb)
             : cmv_sg_stepsizes(r_p_r, b_b, s.params.mu0_w, s.params.mu0_f, s.prev_mu_w, fb);
    if (mu.fallback) ++s.step_fallbacks;
  }
  const cplx g = e * std::conj(z);
  const double nu = ccm ? s.params.nu : 1.0;
  s.w = s.proj.P * (s.w - (mu.mu_w * g) * r) + (nu * (s.proj.anchor * h_hat));
  // z depends on f through -f^H b, so descent on |z|^2 moves f along +z^* b.
  if (fb) s.f += (mu.mu_f * g) * bm.cast<cplx>();
  detail::apply_mask(s);
  s.prev_mu_w = mu.mu_w;
  ++s.steps;
  detail::guard(s);
  return z;
}

}  // namespace

cplx ccm_sg_step(ReceiverState& s, const CVec& r, const RVec& b_hat, const CVec& h_hat) {
  return sg_step(s, r, b_hat, h_hat, true);
}

cplx cmv_sg_step(ReceiverState& s, const CVec& r, const RVec& b_hat, const CVec& h_hat) {
  return sg_step(s, r, b_hat, h_hat, false);
}

}  // namespace blinddf::adaptrx
