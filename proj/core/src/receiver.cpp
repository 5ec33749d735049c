#include <cmath>
#include <string>

#include "blinddf/adaptrx.hpp"

namespace blinddf::adaptrx {

std::string_view to_string(Criterion c) { return c == Criterion::CCM ? "CCM" : "CMV"; }
std::string_view to_string(Algorithm a) { return a == Algorithm::SG ? "SG" : "RLS"; }

bool ReceiverState::has_feedback() const {
  for (bool m : mask) {
    if (m) return true;
  }
  return false;
}

double ReceiverState::constraint_residual(const CVec& h_hat) const {
  const double scale = params.criterion == Criterion::CCM ? params.nu : 1.0;
  return (C.transpose().cast<cplx>() * w - scale * h_hat).norm();
}

namespace {

void check_mask(const FeedbackMask& mask, int K, int user) {
  if (static_cast<int>(mask.size()) != K) {
    throw ConfigError("feedback mask length " + std::to_string(mask.size()) +
                      " does not match K = " + std::to_string(K));
  }
  if (mask[user]) throw ConfigError("feedback mask may not allow self-cancellation");
}

void init_feedback_stats(ReceiverState& s) {
  s.i_inv = s.params.delta * CMat::Identity(s.K, s.K);
  s.t = CMat::Zero(s.M, s.K);
  s.v = CVec::Zero(s.K);
}

}  // namespace

void reset(ReceiverState& s) {
  s.w = CVec::Zero(s.M);
  s.w.head(s.code.size()) = s.code.cast<cplx>();
  s.f = CVec::Zero(s.K);
  const auto mode = s.params.criterion == Criterion::CCM ? chest::StatMode::CcmUsesRk
                                                         : chest::StatMode::CmvUsesR;
  s.acc = chest::StatAccumulator::make(mode, s.M, s.L_p, s.params.alpha, s.params.delta);
  s.d = CVec::Zero(s.M);
  init_feedback_stats(s);
  s.prev_mu_w = 0.0;
  s.unreliability = 0.5;
  s.b_identity_active = false;
}

ReceiverState make_receiver(const ReceiverParams& params, const RMat& C, const RVec& code,
                            int user, int K, FeedbackMask mask) {
  if (K < 1) throw ConfigError("make_receiver: K must be positive");
  if (user < 0 || user >= K) throw ConfigError("make_receiver: user index out of range");
  if (code.size() < 1 || code.size() > C.rows()) {
    throw ConfigError("make_receiver: code length inconsistent with constraint matrix");
  }
  if (params.algorithm == Algorithm::SG && (params.mu0_w < 0.0 || params.mu0_f < 0.0)) {
    throw ConfigError("make_receiver: step sizes must be nonnegative");
  }
  check_mask(mask, K, user);
  ReceiverState s;
  s.params = params;
  s.user = user;
  s.M = static_cast<int>(C.rows());
  s.L_p = static_cast<int>(C.cols());
  s.K = K;
  s.C = C;
  s.code = code;
  s.proj = make_projection(C);
  s.mask = std::move(mask);
  reset(s);
  return s;
}

void resize_users(ReceiverState& s, int K, FeedbackMask mask) {
  if (K < s.K) throw ConfigError("resize_users: user count may only grow");
  check_mask(mask, K, s.user);
  const int old = s.K;
  s.K = K;
  s.f.conservativeResize(K);
  s.f.tail(K - old).setZero();
  s.v.conservativeResize(K);
  s.v.tail(K - old).setZero();
  s.t.conservativeResize(Eigen::NoChange, K);
  s.t.rightCols(K - old).setZero();
  CMat grown = s.params.delta * CMat::Identity(K, K);
  grown.topLeftCorner(old, old) = s.i_inv;
  s.i_inv = std::move(grown);
  set_mask(s, std::move(mask));
}

void set_mask(ReceiverState& s, FeedbackMask mask) {
  check_mask(mask, s.K, s.user);
  s.mask = std::move(mask);
  for (int j = 0; j < s.K; ++j) {
    if (s.mask[j]) continue;
    s.f[j] = 0.0;
    s.v[j] = 0.0;
    s.t.col(j).setZero();
    s.i_inv.row(j).setZero();
    s.i_inv.col(j).setZero();
    s.i_inv(j, j) = s.params.delta;
  }
}

cplx soft_output(const ReceiverState& s, const CVec& r, const RVec& b_hat) {
  if (r.size() != s.M || b_hat.size() != s.K) {
    throw ConfigError("soft_output: dimension mismatch (r " + std::to_string(r.size()) +
                      ", b " + std::to_string(b_hat.size()) + ")");
  }
  return s.w.dot(r) - s.f.dot(b_hat.cast<cplx>());
}

cplx adapt(ReceiverState& s, const CVec& r, const RVec& b_hat, const CVec& h_hat) {
  if (s.params.algorithm == Algorithm::SG) {
    return s.params.criterion == Criterion::CCM ? ccm_sg_step(s, r, b_hat, h_hat)
                                                : cmv_sg_step(s, r, b_hat, h_hat);
  }
  return s.params.criterion == Criterion::CCM ? ccm_rls_step(s, r, b_hat, h_hat)
                                              : cmv_rls_step(s, r, b_hat, h_hat);
}

}  // namespace blinddf::adaptrx
