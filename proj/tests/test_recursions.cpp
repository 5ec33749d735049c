#include "blinddf/adaptrx.hpp"
#include "blinddf/recursions.hpp"
#include "blinddf/sigmodel.hpp"
#include "test_util.hpp"

using namespace blinddf;

namespace {

constexpr int kSteps = 50;
constexpr int kSeeds = 10;
constexpr double kTol = 1e-6;

struct Small {
  RVec code;
  RMat C;
  int K = 3;
};

// N = 6, L_p = 3 gives M = 8.
Small small_setup(Rng& rng) {
  Small s;
  s.code = test::random_bipolar_vec(rng, 6) / std::sqrt(6.0);
  s.C = sigmodel::constraint_matrix(s.code, 3);
  return s;
}

// Exponentially weighted sum with the delta-scaled identity as initial value.
struct Weighted {
  CMat sum;
  double alpha;
  void add(const CVec& x) { sum = alpha * sum + x * x.adjoint(); }
};

Weighted start(Eigen::Index n, double alpha, double delta) {
  return {CMat::Identity(n, n) / delta, alpha};
}

CMat allowed_block(const CMat& m, const adaptrx::FeedbackMask& mask) {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) idx.push_back(static_cast<Eigen::Index>(j));
  }
  CMat out(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < idx.size(); ++b) out(a, b) = m(idx[a], idx[b]);
  }
  return out;
}

void run_receiver_recursions(adaptrx::Criterion crit) {
  double worst_r = 0.0;
  double worst_i = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(derive_seed(77, seed));
    const auto s = small_setup(rng);
    adaptrx::ReceiverParams p;
    p.criterion = crit;
    p.algorithm = adaptrx::Algorithm::RLS;
    p.alpha = 0.95;
    p.delta = 2.0;
    const adaptrx::FeedbackMask mask{true, false, true};
    auto rx = adaptrx::make_receiver(p, s.C, s.code, 1, s.K, mask);
    const auto M = s.C.rows();
    auto wr = start(M, p.alpha, p.delta);
    auto wi = start(s.K, p.alpha, p.delta);
    for (int i = 0; i < kSteps; ++i) {
      const CVec r = test::random_cvec(rng, M);
      const RVec b = test::random_bipolar_vec(rng, s.K);
      const CVec h = test::random_cvec(rng, 3).normalized();
      const cplx z = adaptrx::adapt(rx, r, b, h);
      CVec bm = b.cast<cplx>();
      bm[1] = 0.0;
      if (crit == adaptrx::Criterion::CCM) {
        wr.add(std::conj(z) * r);
        wi.add(std::conj(z) * bm);
      } else {
        wr.add(r);
        wi.add(bm);
      }
    }
    worst_r = std::max(worst_r, test::rel_err(rx.acc.r_inv, wr.sum.inverse()));
    worst_i = std::max(worst_i, test::rel_err(allowed_block(rx.i_inv, mask),
                                              allowed_block(wi.sum, mask).inverse()));
    CHECK(rx.i_inv(1, 1) == cplx(p.delta));
    CHECK(rx.i_inv.row(1).cwiseAbs().sum() == doctest::Approx(p.delta));
  }
  CHECK(worst_r < kTol);
  CHECK(worst_i < kTol);
}

void run_projected(bool weighted) {
  double worst = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(derive_seed(91, seed));
    const auto s = small_setup(rng);
    const double alpha = 0.5;
    const double delta = 3.0;
    CMat x = CMat::Identity(3, 3) / delta;
    CMat x_inv = delta * CMat::Identity(3, 3);
    for (int i = 0; i < kSteps; ++i) {
      const CVec r = test::random_cvec(rng, s.C.rows());
      const cplx z = weighted ? complex_gaussian(rng) : cplx(1.0);
      const CVec g = s.C.cast<cplx>().adjoint() * r * z;
      x = (1.0 - alpha) * x + alpha * g * g.adjoint();
      rls::projected_inverse_update(x_inv, g, alpha);
    }
    worst = std::max(worst, test::rel_err(x_inv, x.inverse()));
    CHECK(x_inv.isApprox(x_inv.adjoint(), 0.0));
  }
  CHECK(worst < kTol);
}

}  // namespace

TEST_SUITE("recursions") {

TEST_CASE("inverse update tracks the direct inverse and stays Hermitian") {
  double worst = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(derive_seed(5, seed));
    const double alpha = 0.9;
    auto w = start(8, alpha, 4.0);
    CMat p_inv = 4.0 * CMat::Identity(8, 8);
    for (int i = 0; i < kSteps; ++i) {
      const CVec x = test::random_cvec(rng, 8);
      const CMat before = p_inv;
      const CVec g = rls::inverse_update(p_inv, x, alpha);
      w.add(x);
      // Gain definition: G = P^{-1} x / (alpha + x^H P^{-1} x) with the old inverse.
      const CVec u = before * x;
      const CVec expect = u / (alpha + x.dot(u));
      CHECK((g - expect).norm() < 1e-10 * expect.norm());
      for (Eigen::Index a = 0; a < 8; ++a) {
        CHECK(p_inv(a, a).imag() == 0.0);
        for (Eigen::Index b = 0; b < 8; ++b) CHECK(p_inv(a, b) == std::conj(p_inv(b, a)));
      }
    }
    worst = std::max(worst, test::rel_err(p_inv, w.sum.inverse()));
  }
  CHECK(worst < kTol);
}

TEST_CASE("CCM-RLS: R_k^{-1} and I_k^{-1} recursions") {
  run_receiver_recursions(adaptrx::Criterion::CCM);
}

TEST_CASE("CMV-RLS: R^{-1} and B^{-1} recursions") {
  run_receiver_recursions(adaptrx::Criterion::CMV);
}

TEST_CASE("projected recursion with weighted regressor (Gamma)") { run_projected(true); }

TEST_CASE("projected recursion with plain regressor (Theta)") { run_projected(false); }

TEST_CASE("receiver gamma matches the direct projected inverse") {
  for (auto crit : {adaptrx::Criterion::CCM, adaptrx::Criterion::CMV}) {
    Rng rng(33);
    const auto s = small_setup(rng);
    adaptrx::ReceiverParams p;
    p.criterion = crit;
    p.alpha = 0.97;
    auto rx = adaptrx::make_receiver(p, s.C, s.code, 0, 1, {false});
    for (int i = 0; i < kSteps; ++i) {
      adaptrx::adapt(rx, test::random_cvec(rng, s.C.rows()), RVec::Ones(1),
                     CVec::Ones(3).normalized());
    }
    const CMat Cc = s.C.cast<cplx>();
    const CMat direct = (Cc.adjoint() * rx.acc.r_inv * Cc).inverse();
    CHECK(test::rel_err(rx.acc.gamma, direct) < 1e-9);
  }
}

}  // TEST_SUITE
