#include <cmath>

#include <Eigen/Eigenvalues>

#include "blinddf/adaptrx.hpp"
#include "blinddf/sigmodel.hpp"
#include "test_util.hpp"

using namespace blinddf;
using adaptrx::Algorithm;
using adaptrx::Criterion;

namespace {

// A K-user link at fixed Eb/N0 with slowly fading, power-controlled channels.
struct Link {
  sigmodel::SpreadingEnsemble ens;
  sigmodel::ChannelRealization ch;
  sigmodel::TransmitFrame frame;
  double sigma2 = 0.0;
  Rng noise;

  Link(int K, int symbols, double ebn0_db, std::uint64_t seed)
      : noise(derive_seed(seed, 4)) {
    ens = sigmodel::gen_gold_sequences(31, K, derive_seed(seed, 1));
    sigmodel::build_structured_matrices(ens, 6, 2);
    const std::vector<double> prof{0.0, -3.0, -6.0};
    ch = sigmodel::gen_channel(K, 6, prof, 1e-4, symbols, derive_seed(seed, 2));
    ch.power_controlled = true;
    frame = sigmodel::gen_frame(K, symbols, RVec::Ones(K), {}, derive_seed(seed, 3));
    sigma2 = sigmodel::noise_variance(ebn0_db);
  }

  CVec received(int i) { return sigmodel::synthesize_received(frame, ens, ch, sigma2, i, ens.K, noise); }
  RVec symbols(int i) const {
    RVec b(ens.K);
    for (int k = 0; k < ens.K; ++k) b[k] = frame.symbol(k, i);
    return b;
  }
};

// Two length-8 codes (correlation 1/4), flat static channel, 15 dB, the
// interferer received 12 dB above the desired user.
struct TwoChip {
  sigmodel::SpreadingEnsemble ens;
  sigmodel::ChannelRealization ch;
  sigmodel::TransmitFrame frame;
  Rng noise;

  explicit TwoChip(int seed) : noise(derive_seed(seed, 3)) {
    RVec c1(8), c2(8);
    c1 << 1, 1, 1, 1, 1, 1, 1, 1;
    c2 << 1, -1, 1, -1, 1, -1, 1, 1;
    ens = sigmodel::ensemble_from_codes({c1 / std::sqrt(8.0), c2 / std::sqrt(8.0)});
    sigmodel::build_structured_matrices(ens, 1, 1);
    const std::vector<double> flat{0.0};
    ch = sigmodel::gen_channel(2, 1, flat, 0.0, 500, derive_seed(seed, 1));
    ch.power_controlled = true;
    RVec amp(2);
    amp << 1.0, 4.0;
    frame = sigmodel::gen_frame(2, 500, amp, {}, derive_seed(seed, 2));
  }

  CVec received(int i) {
    return sigmodel::synthesize_received(frame, ens, ch, sigmodel::noise_variance(15.0), i, 2, noise);
  }
};

adaptrx::ReceiverParams params(Criterion c, Algorithm a) {
  adaptrx::ReceiverParams p;
  p.criterion = c;
  p.algorithm = a;
  return p;
}

adaptrx::FeedbackMask all_but(int K, int user) {
  adaptrx::FeedbackMask m(K, true);
  m[user] = false;
  return m;
}

const Criterion kCriteria[] = {Criterion::CCM, Criterion::CMV};
const Algorithm kAlgorithms[] = {Algorithm::SG, Algorithm::RLS};

}  // namespace

TEST_SUITE("adaptrx") {

TEST_CASE("projection is idempotent, Hermitian and annihilates C") {
  for (int t = 0; t < 20; ++t) {
    RMat C = RMat::Random(8, 3);
    const auto proj = adaptrx::make_projection(C);
    CHECK((proj.P * proj.P - proj.P).norm() < 1e-10);
    CHECK((C.transpose() * proj.P).norm() < 1e-10);
    CHECK((proj.P - proj.P.transpose()).norm() == 0.0);
    CHECK((C.transpose() * proj.anchor - RMat::Identity(3, 3)).norm() < 1e-10);
    // Independent oracle: I - Q Q^T from a QR factorization of C.
    Eigen::HouseholderQR<RMat> qr(C);
    const RMat Q = qr.householderQ() * RMat::Identity(8, 3);
    CHECK((proj.P - (RMat::Identity(8, 8) - Q * Q.transpose())).norm() < 1e-12);
  }
}

TEST_CASE("projection with orthonormal columns is I - C C^T") {
  RMat C = RMat::Zero(5, 2);
  C(0, 0) = 1.0;
  C(3, 1) = 1.0;
  const auto proj = adaptrx::make_projection(C);
  CHECK((proj.P - (RMat::Identity(5, 5) - C * C.transpose())).norm() < 1e-15);
}

TEST_CASE("rank-deficient constraint is rejected") {
  RMat C = RMat::Random(6, 3);
  C.col(2) = 2.0 * C.col(0);
  CHECK_THROWS_AS(adaptrx::make_projection(C), NumericError);
}

TEST_CASE("constraint holds after every update for every algorithm") {
  const int K = 4;
  for (auto c : kCriteria) {
    for (auto a : kAlgorithms) {
      Link link(K, 300, 12.0, 5);
      auto p = params(c, a);
      p.nu = c == Criterion::CCM ? 1.3 : 1.0;
      std::vector<adaptrx::ReceiverState> rx;
      for (int k = 0; k < K; ++k) {
        rx.push_back(adaptrx::make_receiver(p, link.ens.constraint[k], link.ens.codes[k], k, K,
                                            all_but(K, k)));
      }
      double worst = 0.0;
      for (int i = 0; i < 300; ++i) {
        const CVec r = link.received(i);
        const RVec b = link.symbols(i);
        for (int k = 0; k < K; ++k) {
          const CVec h = link.ch.taps(k, i);
          adaptrx::adapt(rx[k], r, b, h);
          worst = std::max(worst, rx[k].constraint_residual(h));
          CHECK(rx[k].f[k] == cplx(0.0));
          const CMat& ri = rx[k].acc.r_inv;
          CHECK((ri - ri.adjoint()).norm() <= 1e-10 * ri.norm());
        }
      }
      INFO(adaptrx::to_string(c) << "-" << adaptrx::to_string(a));
      CHECK(worst <= 1e-8);
    }
  }
}

TEST_CASE("all-zero feedback mask reproduces the linear receiver bit for bit") {
  const int K = 3;
  for (auto c : kCriteria) {
    for (auto a : kAlgorithms) {
      Link link(K, 200, 10.0, 8);
      const auto p = params(c, a);
      const adaptrx::FeedbackMask none(K, false);
      auto lin = adaptrx::make_receiver(p, link.ens.constraint[0], link.ens.codes[0], 0, K, none);
      auto df = adaptrx::make_receiver(p, link.ens.constraint[0], link.ens.codes[0], 0, K,
                                       all_but(K, 0));
      adaptrx::set_mask(df, none);
      Rng junk(3);
      for (int i = 0; i < 200; ++i) {
        const CVec r = link.received(i);
        const CVec h = link.ch.taps(0, i);
        const cplx z1 = adaptrx::adapt(lin, r, link.symbols(i), h);
        // Decisions fed to a receiver without feedback must not matter.
        const cplx z2 = adaptrx::adapt(df, r, test::random_bipolar_vec(junk, K), h);
        CHECK(z1 == z2);
      }
      CHECK(lin.w == df.w);
      CHECK(df.f.isZero(0.0));
    }
  }
}

TEST_CASE("frozen SG steps leave a feasible filter unchanged") {
  Link link(2, 5, 10.0, 2);
  for (auto c : kCriteria) {
    auto p = params(c, Algorithm::SG);
    p.normalized_steps = false;
    p.mu0_w = 0.0;
    p.mu0_f = 0.0;
    auto rx = adaptrx::make_receiver(p, link.ens.constraint[0], link.ens.codes[0], 0, 2,
                                     all_but(2, 0));
    const CVec h = link.ch.taps(0, 0);
    adaptrx::adapt(rx, link.received(0), link.symbols(0), h);
    const CVec w0 = rx.w;
    const CVec f0 = rx.f;
    for (int i = 1; i < 5; ++i) adaptrx::adapt(rx, link.received(i), link.symbols(i), h);
    CHECK((rx.w - w0).norm() < 1e-12);
    CHECK(rx.f == f0);
  }
}

TEST_CASE("CCM step sizes solve the coupled pair") {
  // a = mu_w |z| e rPr and c = mu_f |z| e bb with |z| = 2, e = 3, rPr = 4, bb = 8:
  // a = mu0 (3 - c), c = mu0 (3 - a)  =>  a = c = 3 mu0 / (1 + mu0)
  const auto mu = adaptrx::ccm_sg_stepsizes(2.0, 3.0, 4.0, 8.0, 0.05, 0.05);
  CHECK_FALSE(mu.fallback);
  const double a = 3.0 * 0.05 / 1.05;
  CHECK(mu.mu_w == doctest::Approx(a / 24.0).epsilon(1e-14));
  CHECK(mu.mu_f == doctest::Approx(a / 48.0).epsilon(1e-14));

  // Substituting back into both closed forms reproduces them.
  const auto m2 = adaptrx::ccm_sg_stepsizes(cplx(0.6, -0.3), -0.55, 7.0, 3.0, 0.02, 0.3);
  const double az = std::abs(cplx(0.6, -0.3));
  CHECK(m2.mu_w == doctest::Approx(0.02 * (az + 1.0 - m2.mu_f * az * -0.55 * 3.0) / (az * -0.55 * 7.0)).epsilon(1e-12));
  CHECK(m2.mu_f == doctest::Approx(0.3 * (az + 1.0 - m2.mu_w * az * -0.55 * 7.0) / (az * -0.55 * 3.0)).epsilon(1e-12));

  const auto lin = adaptrx::ccm_sg_stepsizes(cplx(0.0, 2.0), 3.0, 4.0, 8.0, 0.05, 0.05, false);
  CHECK(lin.mu_f == 0.0);
  CHECK(lin.mu_w == doctest::Approx(0.05 * 3.0 / 24.0));
}

TEST_CASE("CCM step sizes fall back on a unit-modulus output") {
  const auto mu = adaptrx::ccm_sg_stepsizes(1.0, 0.0, 4.0, 8.0, 0.05, 0.01);
  CHECK(mu.fallback);
  CHECK(mu.mu_w == 0.05);
  CHECK(mu.mu_f == 0.01);
  CHECK(adaptrx::ccm_sg_stepsizes(1.0, 0.0, 4.0, 8.0, 0.05, 0.01, false).mu_f == 0.0);
}

TEST_CASE("an SG feedback step lowers the instantaneous cost") {
  Rng rng(404);
  const Link L(4, 1, 10.0, 3);
  for (auto crit : {Criterion::CCM, Criterion::CMV}) {
    for (int trial = 0; trial < 50; ++trial) {
      auto p = params(crit, Algorithm::SG);
      p.normalized_steps = false;
      p.mu0_w = 0.0;
      p.mu0_f = 1e-3;
      auto rx = adaptrx::make_receiver(p, L.ens.constraint[0], L.ens.codes[0], 0, 4, all_but(4, 0));
      rx.f = test::random_cvec(rng, 4, 0.5);
      rx.f[0] = 0.0;
      const CVec r = test::random_cvec(rng, L.ens.M(), 0.2) + L.ens.constraint[0].col(0).cast<cplx>();
      const RVec b = test::random_bipolar_vec(rng, 4);
      auto cost = [&](const adaptrx::ReceiverState& s) {
        const double m = std::norm(adaptrx::soft_output(s, r, b));
        return crit == Criterion::CCM ? (m - 1.0) * (m - 1.0) : m;
      };
      const double before = cost(rx);
      // h_hat = C^H w keeps w in place, so only f moves.
      const CVec w0 = rx.w;
      adaptrx::adapt(rx, r, b, rx.C.transpose().cast<cplx>() * rx.w);
      CHECK((rx.w - w0).norm() < 1e-12);
      CHECK(cost(rx) < before);
    }
  }
}

TEST_CASE("CMV step sizes by hand substitution and joint fixed point") {
  const auto lin = adaptrx::cmv_sg_stepsizes(2.0, 4.0, 0.1, 0.1, 0.0, false);
  CHECK(lin.mu_w == doctest::Approx(0.05));
  const auto mu = adaptrx::cmv_sg_stepsizes(2.0, 4.0, 0.1, 0.1, 0.0);
  CHECK(mu.mu_f == doctest::Approx(0.025));
  CHECK(mu.mu_w == doctest::Approx(0.045));
  // Repeating the sequential rule with fixed inputs converges to the joint
  // solution of mu_w rPr = mu0 (1 - mu_f bb), mu_f bb = mu0 (1 - mu_w rPr).
  double prev = 0.0;
  adaptrx::StepSizes s;
  for (int i = 0; i < 20; ++i) {
    s = adaptrx::cmv_sg_stepsizes(2.0, 4.0, 0.1, 0.1, prev);
    prev = s.mu_w;
  }
  CHECK(s.mu_w == doctest::Approx(0.09 / 0.99 / 2.0).epsilon(1e-12));
  CHECK(s.mu_f == doctest::Approx(0.1 * (1.0 - 0.09 / 0.99) / 4.0).epsilon(1e-12));
  CHECK(adaptrx::cmv_sg_stepsizes(0.0, 4.0, 0.1, 0.1, 0.0).fallback);
}

TEST_CASE("linear RLS filters equal the closed-form solution with the same statistics") {
  Link link(4, 400, 12.0, 21);
  for (auto c : kCriteria) {
    const auto p = params(c, Algorithm::RLS);
    const adaptrx::FeedbackMask none(4, false);
    auto rx = adaptrx::make_receiver(p, link.ens.constraint[1], link.ens.codes[1], 1, 4, none);
    CVec h;
    for (int i = 0; i < 400; ++i) {
      h = link.ch.taps(1, i);
      adaptrx::adapt(rx, link.received(i), link.symbols(i), h);
    }
    const double beta = 1.0 - p.alpha;
    const CMat R = beta * rx.acc.r_inv.inverse();
    const RMat& C = link.ens.constraint[1];
    adaptrx::BatchSolution sol;
    if (c == Criterion::CCM) {
      sol = adaptrx::solve_df_ccm_batch(R, rx.d, CMat::Zero(36, 4), CMat::Identity(4, 4),
                                        CVec::Zero(4), C, h, p.nu, none);
    } else {
      sol = adaptrx::solve_df_cmv_batch(R, CMat::Zero(36, 4), CMat::Identity(4, 4), C, h, none);
    }
    CHECK((rx.w - sol.w).norm() < 1e-7 * sol.w.norm());
  }
}

TEST_CASE("B estimate with i.i.d. decisions approaches the identity") {
  Rng rng(4);
  auto p = params(Criterion::CMV, Algorithm::RLS);
  p.alpha = 0.9999;
  const int K = 4;
  const RMat C = sigmodel::constraint_matrix(RVec::Constant(8, 1.0 / std::sqrt(8.0)), 2);
  auto rx = adaptrx::make_receiver(p, C, RVec::Constant(8, 1.0 / std::sqrt(8.0)), 0, K,
                                   all_but(K, 0));
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    adaptrx::adapt(rx, test::random_cvec(rng, 9), test::random_bipolar_vec(rng, K),
                   CVec::Ones(2).normalized());
  }
  const double weight = (1.0 - std::pow(p.alpha, n)) / (1.0 - p.alpha);
  const CMat B = rx.i_inv.bottomRightCorner(3, 3).inverse() / weight;
  CHECK(test::rel_err(B, CMat::Identity(3, 3)) < 0.05);
}

TEST_CASE("CCM-SG reduces the CM cost on a stationary two-user link") {
  int wins = 0;
  for (int seed = 0; seed < 20; ++seed) {
    TwoChip link(seed);
    auto p = params(Criterion::CCM, Algorithm::SG);
    p.mu0_w = 0.01;
    auto rx = adaptrx::make_receiver(p, link.ens.constraint[0], link.ens.codes[0], 0, 2,
                                     {false, false});
    double early = 0.0;
    double late = 0.0;
    for (int i = 0; i < 500; ++i) {
      const cplx z = adaptrx::adapt(rx, link.received(i), RVec::Zero(2), link.ch.taps(0, i));
      const double cost = std::pow(std::norm(z) - 1.0, 2);
      if (i < 100) early += cost;
      if (i >= 400) late += cost;
    }
    if (late < early) ++wins;
  }
  CHECK(wins > 10);
}

TEST_CASE("CMV-SG output power decreases on a stationary two-user link") {
  int wins = 0;
  for (int seed = 0; seed < 20; ++seed) {
    TwoChip link(seed);
    auto rx = adaptrx::make_receiver(params(Criterion::CMV, Algorithm::SG), link.ens.constraint[0],
                                     link.ens.codes[0], 0, 2, {false, false});
    double first = 0.0;
    double late = 0.0;
    for (int i = 0; i < 500; ++i) {
      const cplx z = adaptrx::adapt(rx, link.received(i), RVec::Zero(2), link.ch.taps(0, i));
      if (i < 20) first += std::norm(z) / 20.0;
      if (i >= 400) late += std::norm(z) / 100.0;
    }
    if (late < first) ++wins;
  }
  CHECK(wins > 10);
}

TEST_CASE("non-finite input triggers a counted reset") {
  for (auto c : kCriteria) {
    for (auto a : kAlgorithms) {
      Link link(2, 10, 10.0, 1);
      auto rx = adaptrx::make_receiver(params(c, a), link.ens.constraint[0], link.ens.codes[0],
                                       0, 2, all_but(2, 0));
      for (int i = 0; i < 5; ++i) adaptrx::adapt(rx, link.received(i), link.symbols(i), link.ch.taps(0, i));
      CVec bad = link.received(5);
      bad[3] = std::nan("");
      adaptrx::adapt(rx, bad, link.symbols(5), link.ch.taps(0, 5));
      CHECK(rx.divergence_resets == 1);
      CHECK(rx.w.head(31) == link.ens.codes[0].cast<cplx>());
      CHECK(rx.f.isZero(0.0));
    }
  }
}

TEST_CASE("receiver validates dimensions and masks") {
  Link link(3, 2, 10.0, 1);
  const auto p = params(Criterion::CCM, Algorithm::RLS);
  CHECK_THROWS_AS(adaptrx::make_receiver(p, link.ens.constraint[0], link.ens.codes[0], 0, 3,
                                         {true, true, true}),
                  ConfigError);
  CHECK_THROWS_AS(adaptrx::make_receiver(p, link.ens.constraint[0], link.ens.codes[0], 0, 3,
                                         {false, true}),
                  ConfigError);
  auto rx = adaptrx::make_receiver(p, link.ens.constraint[0], link.ens.codes[0], 0, 3,
                                   all_but(3, 0));
  CHECK_THROWS_AS(adaptrx::adapt(rx, CVec::Zero(5), link.symbols(0), link.ch.taps(0, 0)),
                  ConfigError);
  CHECK_THROWS_AS(adaptrx::adapt(rx, link.received(0), RVec::Ones(2), link.ch.taps(0, 0)),
                  ConfigError);
  CHECK_THROWS_AS(adaptrx::adapt(rx, link.received(0), link.symbols(0), CVec::Ones(3)),
                  ConfigError);
}

TEST_CASE("growing the user set keeps old taps and zeroes new ones") {
  Link link(5, 60, 10.0, 6);
  auto rx = adaptrx::make_receiver(params(Criterion::CCM, Algorithm::RLS), link.ens.constraint[0],
                                   link.ens.codes[0], 0, 3, all_but(3, 0));
  for (int i = 0; i < 50; ++i) {
    RVec b = link.symbols(i).head(3);
    adaptrx::adapt(rx, link.received(i), b, link.ch.taps(0, i));
  }
  const CVec f_old = rx.f;
  adaptrx::resize_users(rx, 5, all_but(5, 0));
  CHECK(rx.K == 5);
  CHECK(rx.f.head(3) == f_old);
  CHECK(rx.f.tail(2).isZero(0.0));
  CHECK(rx.i_inv.rows() == 5);
  adaptrx::adapt(rx, link.received(50), link.symbols(50), link.ch.taps(0, 50));
  CHECK(rx.constraint_residual(link.ch.taps(0, 50)) < 1e-8);
  CHECK_THROWS_AS(adaptrx::resize_users(rx, 4, all_but(4, 0)), ConfigError);

  adaptrx::FeedbackMask m = all_but(5, 0);
  m[2] = false;
  adaptrx::set_mask(rx, m);
  CHECK(rx.f[2] == cplx(0.0));
}

TEST_CASE("convexity flag follows D against 1/4 over random instances") {
  Rng rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const int dim = 1 + static_cast<int>(rng() % 6);
    CVec u = test::random_cvec(rng, dim);
    double D;
    bool expect;
    if (t % 2 == 0) {
      D = 0.25 + 1e-6 + 2.0 * unit(rng);
      u *= 3.0 * unit(rng);
      expect = true;
    } else {
      D = 0.25 * unit(rng);
      // ||u||^2 < 1/4 - D keeps the coordinate directions non-convex.
      u *= std::sqrt((0.25 - D) * unit(rng)) / u.norm();
      expect = false;
    }
    const auto rep = adaptrx::convexity_diagnostic(u, D);
    // Entrywise: off-diagonal 16 u_a u_b^*, diagonal 16 (D - 1/4 + ||u||^2).
    CMat H(dim, dim);
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) {
        H(a, b) = a == b ? cplx(16.0 * (D - 0.25 + u.squaredNorm())) : 16.0 * u[a] * std::conj(u[b]);
      }
    }
    CHECK(test::rel_err(rep.hessian, H) < 1e-12);
    const double lmin = Eigen::SelfAdjointEigenSolver<CMat>(H).eigenvalues()[0];
    CHECK(rep.min_eigenvalue == doctest::Approx(lmin).epsilon(1e-9));
    CHECK(rep.convex == expect);
    ++checked;
  }
  CHECK(checked == 1000);
  const auto zero = adaptrx::convexity_diagnostic(CVec::Zero(4), 0.1);
  CHECK(zero.min_eigenvalue == doctest::Approx(-2.4));
  CHECK_FALSE(zero.convex);
  const auto single = adaptrx::convexity_diagnostic(CVec(), 0.2);
  CHECK(single.min_eigenvalue == doctest::Approx(16.0 * (0.2 - 0.25)));
  CHECK_FALSE(single.convex);
  CHECK(adaptrx::convexity_diagnostic(CVec(), 0.3).convex);
}

}  // TEST_SUITE
