#pragma once

// Matrix-inversion-lemma recursions shared by the channel estimator and the
// RLS receivers. Every inverse is kept exactly Hermitian.

#include "blinddf/types.hpp"

namespace blinddf::rls {

/// Tracks P^{-1} for P(i) = alpha P(i-1) + x x^H:
///   G = alpha^{-1} P^{-1} x / (1 + alpha^{-1} x^H P^{-1} x)
///   P^{-1} <- alpha^{-1} P^{-1} - alpha^{-1} G x^H P^{-1}
/// Returns G.
CVec inverse_update(CMat& p_inv, const CVec& x, double alpha);

/// Tracks X^{-1} for X(i) = (1 - alpha) X(i-1) + alpha g g^H:
///   X^{-1} <- X^{-1}/(1-alpha) - X^{-1} g g^H X^{-1} / ((1-alpha)^2/alpha + (1-alpha) g^H X^{-1} g)
/// This is the projected-statistics recursion used for the L_p x L_p matrices.
void projected_inverse_update(CMat& x_inv, const CVec& g, double alpha);

}  // namespace blinddf::rls
