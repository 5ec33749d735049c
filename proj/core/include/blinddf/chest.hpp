#pragma once

// Blind channel estimation. The estimate is the unit-norm minimizer of
// h^H C^H R^{-1} C h, i.e. the dominant eigenvector of (C^H R^{-1} C)^{-1}.
// For CCM receivers the |z|^2-weighted covariance R_k stands in for R.

#include "blinddf/types.hpp"

namespace blinddf::chest {

enum class StatMode { CmvUsesR, CcmUsesRk };

struct ChannelEstimate {
  CVec h_hat;            ///< unit norm, length L_p
  int user = 0;
  double quality = 0.0;  ///< smallest eigenvalue of C^H R^{-1} C
};

struct StatAccumulator {
  StatMode mode = StatMode::CmvUsesR;
  CMat r_inv;   ///< recursive estimate of R^{-1} (or R_k^{-1}), unnormalized
  CMat r_inv_c; ///< r_inv * C, M x L_p, cached by refresh()
  CMat gamma;   ///< (C^H R^{-1} C)^{-1}, L_p x L_p
  double alpha = 0.998;
  double delta = 10.0;

  /// Between full recomputations r_inv_c follows the rank-one updates of
  /// r_inv; it is recomputed exactly every kExactPeriod updates.
  static constexpr int kExactPeriod = 256;
  RMat bound_c;
  CMat bound_cc;  ///< bound_c as complex
  CMat proj;      ///< C^H r_inv C, tracked with r_inv_c
  int since_exact = 0;
  bool c_valid = false;

  static StatAccumulator make(StatMode mode, int M, int L_p, double alpha, double delta);

  /// Rank-one update with r (CMV) or conj(z) r (CCM).
  void update(const CVec& r, cplx z);

  /// Recompute gamma from the current r_inv for constraint matrix C.
  /// A different C than last time forces an exact r_inv * C.
  void refresh(const RMat& C);
};

/// Dominant eigenvector of acc.gamma. Throws NumericError on non-finite input.
/// With `warm` (typically the previous estimate) a few power iterations are
/// tried first; the full eigendecomposition is used when they do not
/// converge or the eigenvalue cannot be shown to dominate.
ChannelEstimate estimate_channel(const StatAccumulator& acc, int user = 0,
                                 const CVec* warm = nullptr);

/// Power-iteration settings for estimate_channel.
inline constexpr int kPowerIterations = 8;
inline constexpr double kPowerTolerance = 1e-10;

/// Rotate h_hat by a unit-modulus scalar so that its first nonzero
/// coefficient has phase `reference_phase`.
ChannelEstimate remove_phase_ambiguity(const ChannelEstimate& est, double reference_phase);

/// Rotate h_hat so that h_hat^H h_ref is real and nonnegative (phase
/// reference supplied by the simulator).
ChannelEstimate align_phase(const ChannelEstimate& est, const CVec& h_ref);

struct RkFit {
  double alpha_fit = 0.0;  ///< least-squares scalar in R_k ~ alpha R
  double residual = 0.0;   ///< ||R_k - alpha R||_F / ||alpha R||_F
};

/// How well the weighted covariance R_k is explained by a scaled R.
RkFit rk_validity_diagnostic(const CMat& rk_sample, const CMat& r_sample);

}  // namespace blinddf::chest
