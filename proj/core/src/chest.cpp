#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "blinddf/chest.hpp"
#include "blinddf/recursions.hpp"

namespace blinddf::chest {

StatAccumulator StatAccumulator::make(StatMode mode, int M, int L_p, double alpha,
                                      double delta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("forgetting factor must be in (0,1)");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  StatAccumulator acc;
  acc.mode = mode;
  acc.alpha = alpha;
  acc.delta = delta;
  acc.r_inv = delta * CMat::Identity(M, M);
  acc.gamma = CMat::Identity(L_p, L_p) / delta;
  acc.r_inv_c = CMat::Zero(M, L_p);
  return acc;
}

void StatAccumulator::update(const CVec& r, cplx z) {
  const CVec x = mode == StatMode::CcmUsesRk ? CVec(std::conj(z) * r) : r;
  // u^H C = x^H r_inv C since r_inv is Hermitian.
  Eigen::RowVectorXcd xc;
  if (c_valid) xc = x.adjoint() * r_inv_c;
  const CVec gain = rls::inverse_update(r_inv, x, alpha);
  if (c_valid) {
    const double ia = 1.0 / alpha;
    r_inv_c.noalias() -= gain * xc;
    r_inv_c *= ia;
    const CVec cg = bound_cc.adjoint() * gain;
    proj.noalias() -= cg * xc;
    proj *= ia;
    ++since_exact;
  }
}

void StatAccumulator::refresh(const RMat& C) {
  if (!c_valid || since_exact >= kExactPeriod || bound_c.rows() != C.rows() ||
      bound_c.cols() != C.cols() || bound_c != C) {
    bound_c = C;
    bound_cc = C.cast<cplx>();
    r_inv_c.noalias() = r_inv * bound_cc;
    proj.noalias() = bound_cc.adjoint() * r_inv_c;
    c_valid = true;
    since_exact = 0;
  }
  symmetrize(proj);
  gamma = proj.ldlt().solve(CMat::Identity(proj.rows(), proj.cols()));
  symmetrize(gamma);
}

ChannelEstimate estimate_channel(const StatAccumulator& acc, int user, const CVec* warm) {
  if (!acc.gamma.allFinite()) {
    throw NumericError("estimate_channel: non-finite statistics for user " +
                       std::to_string(user));
  }
  if (warm != nullptr && warm->size() == acc.gamma.rows() && warm->norm() > 0.0) {
    CVec v = warm->normalized();
    const double trace = acc.gamma.trace().real();
    for (int it = 0; it < kPowerIterations; ++it) {
      const CVec y = acc.gamma * v;
      const double lambda = v.dot(y).real();
      if (!(lambda > 0.0)) break;
      // gamma is positive definite, so every other eigenvalue is at most
      // trace - lambda; accept only a provably dominant eigenpair.
      if ((y - lambda * v).norm() <= kPowerTolerance * lambda && lambda >= trace - lambda) {
        ChannelEstimate est;
        est.h_hat = y.normalized();
        est.user = user;
        est.quality = 1.0 / lambda;
        return est;
      }
      v = y.normalized();
    }
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(acc.gamma);
  if (es.info() != Eigen::Success) {
    throw NumericError("estimate_channel: eigendecomposition failed for user " +
                       std::to_string(user));
  }
  const Eigen::Index top = acc.gamma.rows() - 1;  // eigenvalues ascend
  const double lmax = es.eigenvalues()[top];
  if (!(lmax > 0.0) || !std::isfinite(lmax)) {
    throw NumericError("estimate_channel: statistics are not positive definite (user " +
                       std::to_string(user) + ", largest eigenvalue " + std::to_string(lmax) +
                       ")");
  }
  ChannelEstimate est;
  est.h_hat = es.eigenvectors().col(top).normalized();
  est.user = user;
  est.quality = 1.0 / lmax;
  return est;
}

ChannelEstimate remove_phase_ambiguity(const ChannelEstimate& est, double reference_phase) {
  const double scale = est.h_hat.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw NumericError("remove_phase_ambiguity: all-zero channel estimate");
  Eigen::Index first = 0;
  while (std::abs(est.h_hat[first]) <= 1e-12 * scale) ++first;
  const double rot = reference_phase - std::arg(est.h_hat[first]);
  ChannelEstimate out = est;
  out.h_hat *= std::polar(1.0, rot);
  return out;
}

ChannelEstimate align_phase(const ChannelEstimate& est, const CVec& h_ref) {
  if (h_ref.size() != est.h_hat.size()) throw ConfigError("align_phase: length mismatch");
  const cplx c = est.h_hat.dot(h_ref);
  ChannelEstimate out = est;
  if (std::abs(c) > 0.0) out.h_hat *= c / std::abs(c);
  return out;
}

RkFit rk_validity_diagnostic(const CMat& rk_sample, const CMat& r_sample) {
  RkFit fit;
  const double rr = r_sample.squaredNorm();
  if (rr == 0.0) {
    fit.residual = std::numeric_limits<double>::infinity();
    return fit;
  }
  // argmin_a ||R_k - a R||_F over real a.
  fit.alpha_fit = (r_sample.adjoint() * rk_sample).trace().real() / rr;
  const double denom = std::abs(fit.alpha_fit) * std::sqrt(rr);
  fit.residual = denom > 0.0 ? (rk_sample - fit.alpha_fit * r_sample).norm() / denom
                             : std::numeric_limits<double>::infinity();
  return fit;
}

}  // namespace blinddf::chest
