#include <benchmark/benchmark.h>

#include <Eigen/Eigenvalues>

#include "blinddf/adaptrx.hpp"
#include "blinddf/chest.hpp"
#include "blinddf/detect.hpp"
#include "blinddf/recursions.hpp"
#include "blinddf/rng.hpp"
#include "blinddf/sigmodel.hpp"

using namespace blinddf;

namespace {

struct Scenario {
  sigmodel::SpreadingEnsemble ens;
  std::vector<CVec> r;
  int K;

  explicit Scenario(int users) : K(users) {
    ens = sigmodel::gen_gold_sequences(31, K, 7);
    sigmodel::build_structured_matrices(ens, 6, 2);
    Rng rng(11);
    for (int i = 0; i < 256; ++i) {
      CVec v(ens.M());
      for (auto& x : v) x = complex_gaussian(rng);
      r.push_back(v);
    }
  }
};

void run_step(benchmark::State& state, adaptrx::Criterion c, adaptrx::Algorithm a, bool df) {
  const int K = static_cast<int>(state.range(0));
  Scenario sc(K);
  adaptrx::ReceiverParams p;
  p.criterion = c;
  p.algorithm = a;
  adaptrx::FeedbackMask mask(K, df);
  mask[0] = false;
  auto rx = adaptrx::make_receiver(p, sc.ens.constraint[0], sc.ens.codes[0], 0, K, mask);
  RVec b = RVec::Ones(K);
  CVec h = CVec::Zero(6);
  h[0] = 1.0;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(adaptrx::adapt(rx, sc.r[i++ % sc.r.size()], b, h));
  }
}

void BM_CcmRlsLinear(benchmark::State& s) { run_step(s, adaptrx::Criterion::CCM, adaptrx::Algorithm::RLS, false); }
void BM_CcmRlsDf(benchmark::State& s) { run_step(s, adaptrx::Criterion::CCM, adaptrx::Algorithm::RLS, true); }
void BM_CmvRlsDf(benchmark::State& s) { run_step(s, adaptrx::Criterion::CMV, adaptrx::Algorithm::RLS, true); }
void BM_CcmSgDf(benchmark::State& s) { run_step(s, adaptrx::Criterion::CCM, adaptrx::Algorithm::SG, true); }
void BM_CmvSgDf(benchmark::State& s) { run_step(s, adaptrx::Criterion::CMV, adaptrx::Algorithm::SG, true); }

void BM_ChannelEstimate(benchmark::State& state) {
  Scenario sc(1);
  auto acc = chest::StatAccumulator::make(chest::StatMode::CmvUsesR, sc.ens.M(), 6, 0.998, 10.0);
  for (const auto& v : sc.r) acc.update(v, 1.0);
  acc.refresh(sc.ens.constraint[0]);
  for (auto _ : state) benchmark::DoNotOptimize(chest::estimate_channel(acc).h_hat);
}

void BM_InverseUpdate(benchmark::State& state) {
  Scenario sc(1);
  CMat p = 10.0 * CMat::Identity(sc.ens.M(), sc.ens.M());
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rls::inverse_update(p, sc.r[i++ % sc.r.size()], 0.998));
}

void BM_DetectSpa(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  Scenario sc(K);
  std::vector<double> powers(K, 1.0);
  const auto topo = detect::make_topology(detect::TopologyKind::ISPAP, powers, 4, 2);
  CMat W = CMat::Random(sc.ens.M(), K);
  CMat F = CMat::Random(K, K);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detect::detect(topo, W, F, sc.r[i++ % sc.r.size()], &W, &F).final_decisions);
  }
}

void BM_Synthesize(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  Scenario sc(K);
  std::vector<double> prof{0.0, -3.0, -6.0};
  const auto ch = sigmodel::gen_channel(K, 6, prof, 1e-4, 256, 3);
  const auto frame = sigmodel::gen_frame(K, 256, RVec::Ones(K), std::vector<int>(K, 0), 5);
  Rng rng(9);
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sigmodel::synthesize_received(frame, sc.ens, ch, 0.03, i, K, rng));
    i = (i + 1) % 256;
  }
}

}  // namespace

BENCHMARK(BM_CcmRlsLinear)->Arg(10);
BENCHMARK(BM_CcmRlsDf)->Arg(10);
BENCHMARK(BM_CmvRlsDf)->Arg(10);
BENCHMARK(BM_CcmSgDf)->Arg(10);
BENCHMARK(BM_CmvSgDf)->Arg(10);
BENCHMARK(BM_ChannelEstimate);
BENCHMARK(BM_InverseUpdate);
BENCHMARK(BM_DetectSpa)->Arg(10);
BENCHMARK(BM_Synthesize)->Arg(10);

BENCHMARK_MAIN();
