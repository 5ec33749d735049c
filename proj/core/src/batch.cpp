#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "blinddf/adaptrx.hpp"

namespace blinddf::adaptrx {

namespace {

std::vector<int> allowed(const FeedbackMask& mask) {
  std::vector<int> idx;
  for (int j = 0; j < static_cast<int>(mask.size()); ++j) {
    if (mask[j]) idx.push_back(j);
  }
  return idx;
}

// Feedforward solve with a fixed constraint: caches R^{-1} C and its Gram inverse.
struct ConstrainedSolver {
  Eigen::LDLT<CMat> r_fact;
  CMat Cc;
  CMat rc;
  Eigen::LDLT<CMat> g_fact;

  ConstrainedSolver(const CMat& R, const RMat& C) : r_fact(R), Cc(C.cast<cplx>()) {
    if (r_fact.info() != Eigen::Success) throw NumericError("batch solve: covariance factorization failed");
    rc = r_fact.solve(Cc);
    CMat g = Cc.adjoint() * rc;
    g = (0.5 * (g + g.adjoint())).eval();
    g_fact.compute(g);
    if (g_fact.info() != Eigen::Success) throw NumericError("batch solve: constraint Gram factorization failed");
  }

  CVec solve(const CVec& y, const CVec& target) const {
    const CVec a = r_fact.solve(y);
    return a - rc * g_fact.solve(Cc.adjoint() * a - target);
  }
};

// Feedback solve restricted to the allowed entries: f_S = (Q_SS)^{-1} g_S.
CVec restricted_solve(const CMat* Q, const CVec& g, const std::vector<int>& idx, int K) {
  CVec f = CVec::Zero(K);
  if (idx.empty()) return f;
  const int n = static_cast<int>(idx.size());
  CVec gs(n);
  for (int a = 0; a < n; ++a) gs[a] = g[idx[a]];
  if (Q == nullptr) {
    for (int a = 0; a < n; ++a) f[idx[a]] = gs[a];
    return f;
  }
  CMat qs(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) qs(a, b) = (*Q)(idx[a], idx[b]);
  }
  const Eigen::LDLT<CMat> fact(qs);
  if (fact.info() != Eigen::Success) throw NumericError("batch solve: feedback Gram factorization failed");
  const CVec fs = fact.solve(gs);
  for (int a = 0; a < n; ++a) f[idx[a]] = fs[a];
  return f;
}

template <class Ff, class Fb>
BatchSolution alternate(int M, int K, bool has_feedback, Ff&& feedforward, Fb&& feedback) {
  BatchSolution sol;
  sol.w = CVec::Zero(M);
  sol.f = CVec::Zero(K);
  if (!has_feedback) {
    sol.w = feedforward(sol.f);
    sol.iterations = 1;
    return sol;
  }
  // Both half-steps are affine in f, so the limit of the alternation solves
  // (I - G) f = g with G f = fb(ff(f)) - fb(ff(0)). Start from that limit
  // when the alternation contracts; the passes below confirm it.
  const CVec g = feedback(feedforward(sol.f));
  CMat G(K, K);
  for (int j = 0; j < K; ++j) {
    CVec e = CVec::Zero(K);
    e[j] = 1.0;
    G.col(j) = feedback(feedforward(e)) - g;
  }
  const double radius = Eigen::ComplexEigenSolver<CMat>(G, false).eigenvalues().cwiseAbs().maxCoeff();
  if (radius < 1.0) {
    sol.f = (CMat::Identity(K, K) - G).partialPivLu().solve(g);
    if (!sol.f.allFinite()) sol.f.setZero();
    sol.w = feedforward(sol.f);
  }
  double residual = 0.0;
  for (int it = 1; it <= kBatchMaxIterations; ++it) {
    CVec w = feedforward(sol.f);
    CVec f = feedback(w);
    residual = (w - sol.w).norm() + (f - sol.f).norm();
    sol.w = std::move(w);
    sol.f = std::move(f);
    sol.iterations = it;
    if (!sol.w.allFinite() || !sol.f.allFinite()) throw NumericError("batch solve: non-finite iterate");
    if (it > 1 && residual < kBatchTolerance) return sol;
  }
  throw NumericError("batch solve: no convergence after " + std::to_string(kBatchMaxIterations) +
                     " iterations, last residual " + std::to_string(residual));
}

void check_dims(const CMat& R, const CMat& T, const CMat& Q, const RMat& C, const CVec& h,
                const FeedbackMask& mask) {
  const auto M = R.rows();
  const auto K = static_cast<Eigen::Index>(mask.size());
  if (R.cols() != M || C.rows() != M || T.rows() != M || T.cols() != K || Q.rows() != K ||
      Q.cols() != K || h.size() != C.cols()) {
    throw ConfigError("batch solve: dimension mismatch");
  }
}

}  // namespace

BatchSolution solve_df_ccm_batch(const CMat& Rk, const CVec& dk, const CMat& Tk,
                                 const CMat& Ik, const CVec& vk, const RMat& C,
                                 const CVec& h, double nu, const FeedbackMask& mask) {
  check_dims(Rk, Tk, Ik, C, h, mask);
  if (dk.size() != Rk.rows() || vk.size() != Ik.rows()) throw ConfigError("batch solve: dimension mismatch");
  const ConstrainedSolver ff(Rk, C);
  const auto idx = allowed(mask);
  const int K = static_cast<int>(mask.size());
  const CVec target = nu * h;
  return alternate(
      static_cast<int>(Rk.rows()), K, !idx.empty(),
      [&](const CVec& f) { return ff.solve(dk + Tk * f, target); },
      [&](const CVec& w) { return restricted_solve(&Ik, Tk.adjoint() * w - vk, idx, K); });
}

BatchSolution solve_df_cmv_batch(const CMat& R, const CMat& T, const CMat& B, const RMat& C,
                                 const CVec& h, const FeedbackMask& mask, bool b_identity) {
  check_dims(R, T, B, C, h, mask);
  const ConstrainedSolver ff(R, C);
  const auto idx = allowed(mask);
  const int K = static_cast<int>(mask.size());
  return alternate(
      static_cast<int>(R.rows()), K, !idx.empty(),
      [&](const CVec& f) { return ff.solve(T * f, h); },
      [&](const CVec& w) {
        return restricted_solve(b_identity ? nullptr : &B, T.adjoint() * w, idx, K);
      });
}

ConvexityReport convexity_diagnostic(const CVec& u_bar, double D) {
  ConvexityReport rep;
  const auto n = u_bar.size();
  if (n == 0) {
    rep.hessian = CMat(0, 0);
    rep.min_eigenvalue = 16.0 * (D - 0.25);
    rep.convex = rep.min_eigenvalue > 0.0;
    return rep;
  }
  const double uu = u_bar.squaredNorm();
  CMat H = (16.0 * (D - 0.25) + 16.0 * uu) * CMat::Identity(n, n) +
           16.0 * (u_bar * u_bar.adjoint());
  for (Eigen::Index j = 0; j < n; ++j) H(j, j) -= 16.0 * std::norm(u_bar[j]);
  rep.hessian = H;
  Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = es.eigenvalues()[0];
  rep.convex = rep.min_eigenvalue > 0.0;
  return rep;
}

}  // namespace blinddf::adaptrx
