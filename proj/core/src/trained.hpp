#pragma once

// Supervised linear receivers used as reference curves: normalized LMS and
// exponentially weighted RLS, trained on known symbols during pilot windows
// and decision-directed afterwards.

#include <vector>

#include "blinddf/sigmodel.hpp"
#include "blinddf/types.hpp"

namespace blinddf::harness::trained {

struct TrainedChain {
  bool rls = false;
  double mu = 0.2;
  double alpha = 0.998;
  double delta = 10.0;
  std::vector<CVec> w;
  std::vector<CMat> p;  ///< RLS inverse correlation per user
};

TrainedChain make_chain(bool rls, double mu, double alpha, double delta);

/// Add receivers for users entering the system; w starts at the code.
void grow(TrainedChain& chain, int K, const sigmodel::SpreadingEnsemble& ens);

/// Detect and adapt. During pilots the reference is `truth` and the
/// returned decisions are the known symbols.
RVec step(TrainedChain& chain, const CVec& r, const RVec& truth, bool pilot);

}  // namespace blinddf::harness::trained
