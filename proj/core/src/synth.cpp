#include <cmath>
#include <string>

#include "blinddf/sigmodel.hpp"

namespace blinddf::sigmodel {

double TransmitFrame::symbol(int k, int i) const {
  if (i < 0 || i >= symbol_count()) return 0.0;
  if (!start.empty() && i < start[static_cast<std::size_t>(k)]) return 0.0;
  return symbols(k, i);
}

TransmitFrame gen_frame(int K, int symbol_count, RVec amplitudes, std::vector<int> start,
                        std::uint64_t seed) {
  if (amplitudes.size() != K) throw ConfigError("gen_frame: need one amplitude per user");
  if (!start.empty() && static_cast<int>(start.size()) != K) {
    throw ConfigError("gen_frame: need one start index per user");
  }
  TransmitFrame f;
  f.symbols.resize(K, symbol_count);
  Rng rng(seed);
  for (int i = 0; i < symbol_count; ++i) {
    for (int k = 0; k < K; ++k) f.symbols(k, i) = random_bipolar(rng);
  }
  f.amplitudes = std::move(amplitudes);
  f.start = std::move(start);
  return f;
}

CVec synthesize_clean(const TransmitFrame& frame, const SpreadingEnsemble& ensemble,
                      const ChannelRealization& channel, int i, int active) {
  if (!ensemble.structured()) {
    throw ConfigError("synthesize: structured matrices have not been built");
  }
  if (channel.L_p != ensemble.L_p) throw ConfigError("synthesize: L_p mismatch");
  if (active > ensemble.K || active > frame.users() || active > channel.users()) {
    throw ConfigError("synthesize: " + std::to_string(active) +
                      " active users exceed ensemble/frame/channel size");
  }
  if (i < 0 || i >= channel.symbols) throw ConfigError("synthesize: symbol index out of range");

  const int M = ensemble.M();
  const int N = ensemble.N;
  const int L_s = ensemble.L_s;
  const int L_p = channel.L_p;
  CVec r = CVec::Zero(M);
  RVec b(L_s);
  for (int k = 0; k < active; ++k) {
    for (int j = 0; j < L_s; ++j) b[j] = frame.symbol(k, i - j);
    if (b.isZero()) continue;
    const RVec Sb = frame.amplitudes[k] * (ensemble.code_matrix[static_cast<std::size_t>(k)] * b);
    // r[m] += h_{i-j}[lag] * Sb[jN + n] with m = n + lag - jN (same as channel_matrix).
    for (int j = 0; j < L_s; ++j) {
      if (b[j] == 0.0) continue;
      const CVec h = channel.taps(k, i - j);
      for (int n = 0; n < N; ++n) {
        const double x = Sb[j * N + n];
        if (x == 0.0) continue;
        for (int lag = 0; lag < L_p; ++lag) {
          const int m = n + lag - j * N;
          if (m >= 0 && m < M) r[m] += h[lag] * x;
        }
      }
    }
  }
  return r;
}

CVec synthesize_received(const TransmitFrame& frame, const SpreadingEnsemble& ensemble,
                         const ChannelRealization& channel, double sigma2, int i, int active,
                         Rng& rng) {
  CVec r = synthesize_clean(frame, ensemble, channel, i, active);
  if (sigma2 > 0.0) {
    for (Eigen::Index m = 0; m < r.size(); ++m) r[m] += complex_gaussian(rng, sigma2);
  }
  return r;
}

double noise_variance(double ebn0_db, double amplitude) {
  return amplitude * amplitude / std::pow(10.0, ebn0_db / 10.0);
}

}  // namespace blinddf::sigmodel
