#pragma once

// Per-user blind receivers. Each receiver owns a feedforward filter w_k
// (length M) and a feedback filter f_k (length K) and adapts them under the
// linear constraint C_k^H w_k = nu * h_hat_k, using either the constrained
// constant-modulus (CCM) or constrained minimum-variance (CMV) criterion.

#include <cstdint>
#include <string_view>
#include <vector>

#include "blinddf/chest.hpp"
#include "blinddf/types.hpp"

namespace blinddf::adaptrx {

enum class Criterion { CCM, CMV };
enum class Algorithm { SG, RLS };

std::string_view to_string(Criterion c);
std::string_view to_string(Algorithm a);

/// P = I - C (C^H C)^{-1} C^H and the constraint anchor C (C^H C)^{-1}.
/// C is real, so both are real.
struct ProjectionOperator {
  RMat P;
  RMat anchor;
};

/// Throws NumericError when C is rank deficient.
ProjectionOperator make_projection(const RMat& C);

struct StepSizes {
  double mu_w = 0.0;
  double mu_f = 0.0;
  bool fallback = false;  ///< a denominator vanished; fixed mu0 values returned
};

inline constexpr double kStepDenominatorFloor = 1e-12;

/// Normalized CCM-SG step sizes: the joint solution of
///   mu_w = mu0_w (|z| + 1 - mu_f |z| e bb) / (|z| e rPr)
///   mu_f = mu0_f (|z| + 1 - mu_w |z| e rPr) / (|z| e bb)
/// for the current symbol. `has_feedback = false` pins mu_f to zero
/// (linear receiver).
StepSizes ccm_sg_stepsizes(cplx z, double e, double r_p_r, double b_b, double mu0_w,
                           double mu0_f, bool has_feedback = true);

/// Normalized CMV-SG step sizes. mu_f is evaluated first using the previous
/// symbol's mu_w, then mu_w using the fresh mu_f. Same fallback rule.
StepSizes cmv_sg_stepsizes(double r_p_r, double b_b, double mu0_w, double mu0_f,
                           double prev_mu_w, bool has_feedback = true);

struct ReceiverParams {
  Criterion criterion = Criterion::CCM;
  Algorithm algorithm = Algorithm::RLS;
  double nu = 1.0;
  double mu0_w = 0.05;
  double mu0_f = 0.01;
  bool normalized_steps = true;
  double alpha = 0.998;   ///< forgetting factor
  double delta = 10.0;    ///< inverse-matrix initialization scale
  double b_identity_threshold = 0.05;  ///< CMV-RLS: use B ~ I below this unreliability
};

using FeedbackMask = std::vector<bool>;  ///< length K, true where feedback is allowed

struct ReceiverState {
  ReceiverParams params;
  int user = 0;
  int M = 0;
  int L_p = 0;
  int K = 0;

  RMat C;
  RVec code;
  ProjectionOperator proj;

  CVec w;
  CVec f;
  FeedbackMask mask;

  /// R^{-1} (CMV) or R_k^{-1} (CCM) plus (C^H R^{-1} C)^{-1}.
  chest::StatAccumulator acc;

  // RLS statistics. i_inv is I_k^{-1} for CCM and B^{-1} for CMV; t is T_k / T.
  // Rows and columns of i_inv outside the feedback mask are held at delta.
  CMat i_inv;
  CMat t;
  CVec d;
  CVec v;

  double prev_mu_w = 0.0;
  double unreliability = 0.0;  ///< running linear-vs-final decision disagreement
  bool b_identity_active = false;

  std::int64_t steps = 0;
  std::int64_t divergence_resets = 0;
  std::int64_t step_fallbacks = 0;

  bool has_feedback() const;
  double constraint_residual(const CVec& h_hat) const;
};

/// Receiver for `user` with the initialization used throughout: w = code
/// zero-padded to M, f = 0, inverse statistics delta * I.
ReceiverState make_receiver(const ReceiverParams& params, const RMat& C, const RVec& code,
                            int user, int K, FeedbackMask mask);

/// Grow the feedback dimension to K (new users entering); new feedback taps
/// start at zero and new statistics blocks at their initial values.
void resize_users(ReceiverState& state, int K, FeedbackMask mask);

/// Replace the feedback mask; disallowed taps are zeroed immediately.
void set_mask(ReceiverState& state, FeedbackMask mask);

/// Re-initialize filters and statistics (divergence guard).
void reset(ReceiverState& state);

/// z = w^H r - f^H b.
cplx soft_output(const ReceiverState& state, const CVec& r, const RVec& b_hat);

cplx ccm_sg_step(ReceiverState& state, const CVec& r, const RVec& b_hat, const CVec& h_hat);
cplx cmv_sg_step(ReceiverState& state, const CVec& r, const RVec& b_hat, const CVec& h_hat);
cplx ccm_rls_step(ReceiverState& state, const CVec& r, const RVec& b_hat, const CVec& h_hat);
cplx cmv_rls_step(ReceiverState& state, const CVec& r, const RVec& b_hat, const CVec& h_hat);

/// Dispatch on (criterion, algorithm). Returns the a priori soft output.
cplx adapt(ReceiverState& state, const CVec& r, const RVec& b_hat, const CVec& h_hat);

struct BatchSolution {
  CVec w;
  CVec f;
  int iterations = 0;
};

inline constexpr double kBatchTolerance = 1e-9;
inline constexpr int kBatchMaxIterations = 100;

/// Alternates the closed-form DF-CCM feedforward and feedback solutions
/// until ||dw|| + ||df|| < 1e-9. Statistics are expectations:
/// R_k = E[|z|^2 r r^H], d_k = E[z^* r], T_k = E[|z|^2 r b^H],
/// I_k = E[|z|^2 b b^H], v_k = E[z^* b]. Throws NumericError on
/// non-convergence.
BatchSolution solve_df_ccm_batch(const CMat& Rk, const CVec& dk, const CMat& Tk,
                                 const CMat& Ik, const CVec& vk, const RMat& C,
                                 const CVec& h, double nu, const FeedbackMask& mask);

/// Same for DF-CMV with R = E[r r^H], T = E[r b^H], B = E[b b^H]. With
/// `b_identity` the feedback solve uses B = I.
BatchSolution solve_df_cmv_batch(const CMat& R, const CMat& T, const CMat& B, const RMat& C,
                                 const CVec& h, const FeedbackMask& mask,
                                 bool b_identity = false);

struct ConvexityReport {
  CMat hessian;  ///< (K-1) x (K-1), Hermitian
  double min_eigenvalue = 0.0;
  bool convex = false;
};

/// Hessian of the noise-free linear CM cost in the interferer coordinates
/// u_bar = (u_2..u_K), with D = nu^2 |A_1|^2 |h_hat^H h|^2. For K = 1 the
/// Hessian is empty and min_eigenvalue reports the scalar term 16 (D - 1/4).
ConvexityReport convexity_diagnostic(const CVec& u_bar, double D);

}  // namespace blinddf::adaptrx
