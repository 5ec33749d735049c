#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "blinddf/sigmodel.hpp"

namespace blinddf::sigmodel {
namespace {

// Fibonacci LFSR for x^5 + sum_{t in taps} x^t + 1, seeded with all ones:
// a[n+5] = a[n] xor a[n+t] for every tap t < 5.
std::vector<int> m_sequence(std::initializer_list<int> taps) {
  std::vector<int> a(5, 1);
  while (a.size() < static_cast<std::size_t>(kGoldLength) + 5) {
    const std::size_t n = a.size() - 5;
    int v = a[n];
    for (int t : taps) {
      if (t < 5) v ^= a[n + static_cast<std::size_t>(t)];
    }
    a.push_back(v);
  }
  a.resize(kGoldLength);
  return a;
}

}  // namespace

std::vector<std::vector<int>> gold_family_bits() {
  const auto u = m_sequence({5, 2});
  const auto v = m_sequence({5, 4, 3, 2});
  std::vector<std::vector<int>> family{u, v};
  for (int s = 0; s < kGoldLength; ++s) {
    std::vector<int> g(kGoldLength);
    for (int i = 0; i < kGoldLength; ++i) g[i] = u[i] ^ v[(i + s) % kGoldLength];
    family.push_back(std::move(g));
  }
  return family;
}

SpreadingEnsemble gen_gold_sequences(int N, int K, std::uint64_t seed) {
  if (N != kGoldLength) {
    throw ConfigError("gen_gold_sequences: only N = 31 is supported, got N = " +
                      std::to_string(N));
  }
  if (K < 1) throw ConfigError("gen_gold_sequences: K must be at least 1");
  if (K > kGoldFamilySize) {
    throw ConfigError("gen_gold_sequences: Gold family exhausted (" + std::to_string(K) +
                      " > " + std::to_string(kGoldFamilySize) + " members)");
  }
  std::vector<int> members(kGoldFamilySize);
  std::iota(members.begin(), members.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates; std::shuffle's draw pattern is library specific.
  for (int i = 0; i < K; ++i) {
    const auto span = static_cast<std::uint64_t>(kGoldFamilySize - i);
    const int j = i + static_cast<int>(rng() % span);
    std::swap(members[i], members[j]);
  }
  members.resize(K);

  const auto family = gold_family_bits();
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  std::vector<RVec> codes;
  codes.reserve(K);
  for (int m : members) {
    RVec c(N);
    for (int i = 0; i < N; ++i) c[i] = family[m][i] ? -scale : scale;
    codes.push_back(std::move(c));
  }
  auto ens = ensemble_from_codes(std::move(codes));
  ens.family_members = std::move(members);
  return ens;
}

SpreadingEnsemble ensemble_from_codes(std::vector<RVec> codes) {
  if (codes.empty()) throw ConfigError("ensemble_from_codes: no codes");
  const auto n = codes.front().size();
  for (const auto& c : codes) {
    if (c.size() != n) throw ConfigError("ensemble_from_codes: code lengths differ");
    if (std::abs(c.norm() - 1.0) > 1e-9) {
      throw ConfigError("ensemble_from_codes: codes must have unit norm");
    }
  }
  SpreadingEnsemble ens;
  ens.N = static_cast<int>(n);
  ens.K = static_cast<int>(codes.size());
  ens.codes = std::move(codes);
  return ens;
}

}  // namespace blinddf::sigmodel
