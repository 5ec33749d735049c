#pragma once

#include "blinddf/adaptrx.hpp"

namespace blinddf::adaptrx::detail {

/// b with disallowed entries zeroed.
inline RVec masked(const ReceiverState& s, const RVec& b) {
  RVec out = b;
  for (int j = 0; j < s.K; ++j) {
    if (!s.mask[j]) out[j] = 0.0;
  }
  return out;
}

inline void apply_mask(ReceiverState& s) {
  for (int j = 0; j < s.K; ++j) {
    if (!s.mask[j]) s.f[j] = 0.0;
  }
}

inline void check_inputs(const ReceiverState& s, const CVec& r, const RVec& b,
                         const CVec& h) {
  if (r.size() != s.M || b.size() != s.K || h.size() != s.L_p) {
    throw ConfigError("receiver step: dimension mismatch");
  }
}

/// Divergence guard; returns true when the state had to be reset. A
/// non-finite r_inv always reaches w through the constrained solution.
inline bool guard(ReceiverState& s) {
  if (s.w.allFinite() && s.f.allFinite() && s.acc.gamma.allFinite()) {
    return false;
  }
  reset(s);
  ++s.divergence_resets;
  return true;
}

}  // namespace blinddf::adaptrx::detail
