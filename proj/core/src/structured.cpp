#include <string>

#include "blinddf/sigmodel.hpp"

namespace blinddf::sigmodel {

int isi_span(int N, int L_p) {
  if (L_p < 1) throw ConfigError("L_p must be at least 1");
  if (L_p == 1) return 1;
  if (L_p <= N) return 2;
  if (L_p <= 2 * N) return 3;
  throw ConfigError("L_p = " + std::to_string(L_p) + " exceeds 2N");
}

RMat constraint_matrix(const RVec& code, int L_p) {
  const auto N = code.size();
  RMat C = RMat::Zero(N + L_p - 1, L_p);
  for (int j = 0; j < L_p; ++j) C.col(j).segment(j, N) = code;
  return C;
}

RMat code_matrix(const RVec& code, int L_s) {
  const auto N = code.size();
  RMat S = RMat::Zero(L_s * N, L_s);
  for (int j = 0; j < L_s; ++j) S.col(j).segment(j * N, N) = code;
  return S;
}

void build_structured_matrices(SpreadingEnsemble& ensemble, int L_p, int L_s) {
  if (L_s != isi_span(ensemble.N, L_p)) {
    throw ConfigError("inconsistent ISI span: L_p = " + std::to_string(L_p) +
                      " requires L_s = " + std::to_string(isi_span(ensemble.N, L_p)) +
                      ", got " + std::to_string(L_s));
  }
  ensemble.L_p = L_p;
  ensemble.L_s = L_s;
  ensemble.code_matrix.clear();
  ensemble.constraint.clear();
  for (const auto& c : ensemble.codes) {
    ensemble.code_matrix.push_back(code_matrix(c, L_s));
    ensemble.constraint.push_back(constraint_matrix(c, L_p));
  }
}

}  // namespace blinddf::sigmodel
