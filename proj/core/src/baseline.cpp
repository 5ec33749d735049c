#include "blinddf/recursions.hpp"
#include "trained.hpp"

namespace blinddf::harness::trained {

TrainedChain make_chain(bool rls, double mu, double alpha, double delta) {
  TrainedChain c;
  c.rls = rls;
  c.mu = mu;
  c.alpha = alpha;
  c.delta = delta;
  return c;
}

void grow(TrainedChain& c, int K, const sigmodel::SpreadingEnsemble& ens) {
  const int M = ens.M();
  for (int k = static_cast<int>(c.w.size()); k < K; ++k) {
    CVec w = CVec::Zero(M);
    w.head(ens.N) = ens.codes[k].cast<cplx>();
    c.w.push_back(std::move(w));
    if (c.rls) c.p.push_back(c.delta * CMat::Identity(M, M));
  }
}

RVec step(TrainedChain& c, const CVec& r, const RVec& truth, bool pilot) {
  const int K = static_cast<int>(truth.size());
  RVec dec(K);
  const double energy = r.squaredNorm();
  for (int k = 0; k < K; ++k) {
    const cplx z = c.w[k].dot(r);
    dec[k] = pilot ? truth[k] : hard_decision(z.real());
    const cplx e = dec[k] - z;
    if (c.rls) {
      const CVec g = rls::inverse_update(c.p[k], r, c.alpha);
      c.w[k] += g * std::conj(e);
    } else if (energy > 0.0) {
      c.w[k] += (c.mu / energy * std::conj(e)) * r;
    }
  }
  return dec;
}

}  // namespace blinddf::harness::trained
