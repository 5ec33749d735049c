#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "blinddf/sigmodel.hpp"

namespace blinddf::sigmodel {
namespace {

// FFTW's planner is not re-entrant; execution of a finished plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr int kMaxFftSize = 1 << 20;
constexpr double kSpectrumEdge = 0.999;

int fft_size_for(double fdT, int length) {
  const double wanted = std::max(static_cast<double>(length), std::ceil(8.0 / fdT));
  int n = 1;
  while (n < wanted && n < kMaxFftSize) n <<= 1;
  return n;
}

}  // namespace

RVec path_weights_from_db(std::span<const double> profile_db) {
  if (profile_db.empty()) throw ConfigError("power profile is empty");
  RVec p2(profile_db.size());
  for (std::size_t l = 0; l < profile_db.size(); ++l) {
    p2[static_cast<Eigen::Index>(l)] = std::pow(10.0, profile_db[l] / 10.0);
  }
  p2 /= p2.sum();
  return p2.cwiseSqrt();
}

CVec doppler_process(double fdT, int length, Rng& rng) {
  if (fdT < 0.0) throw ConfigError("fdT must be non-negative");
  if (length < 1) throw ConfigError("fading length must be positive");
  if (fdT == 0.0) return CVec::Constant(length, complex_gaussian(rng));

  const int n_fft = fft_size_for(fdT, length);
  std::vector<cplx> spec(static_cast<std::size_t>(n_fft));
  double total = 0.0;
  for (int m = 0; m < n_fft; ++m) {
    const double f = (m < n_fft / 2 ? m : m - n_fft) / static_cast<double>(n_fft);
    const double ratio = std::abs(f) / fdT;
    double s = 0.0;
    if (ratio < 1.0) {
      const double rc = std::min(ratio, kSpectrumEdge);
      s = 1.0 / std::sqrt(1.0 - rc * rc);
    }
    total += s;
    spec[static_cast<std::size_t>(m)] = s > 0.0 ? std::sqrt(s) * complex_gaussian(rng) : cplx{};
  }

  std::vector<cplx> out(static_cast<std::size_t>(n_fft));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(n_fft, reinterpret_cast<fftw_complex*>(spec.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  // Unnormalized inverse: E|x[n]|^2 = sum_m S(f_m).
  const double scale = 1.0 / std::sqrt(total);
  CVec alpha(length);
  for (int i = 0; i < length; ++i) alpha[i] = scale * out[static_cast<std::size_t>(i)];
  return alpha;
}

CVec ChannelRealization::taps(int k, int i) const {
  CVec h = CVec::Zero(L_p);
  if (i < 0) return h;
  const auto& d = delays[static_cast<std::size_t>(k)];
  const auto& p = path_weights[static_cast<std::size_t>(k)];
  const auto& a = fading[static_cast<std::size_t>(k)];
  for (std::size_t l = 0; l < d.size(); ++l) {
    h[d[l]] += p[static_cast<Eigen::Index>(l)] * a(static_cast<Eigen::Index>(l), i);
  }
  if (power_controlled) {
    const double n = h.norm();
    if (n > 0.0) h /= n;
  }
  return h;
}

CMat ChannelRealization::channel_matrix(int k, int i, int N, int L_s) const {
  const int M = N + L_p - 1;
  CMat H = CMat::Zero(M, L_s * N);
  for (int j = 0; j < L_s; ++j) {
    const CVec h = taps(k, i - j);
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < N; ++n) {
        const int lag = m + j * N - n;
        if (lag >= 0 && lag < L_p) H(m, j * N + n) = h[lag];
      }
    }
  }
  return H;
}

ChannelRealization gen_channel(int K, int L_p, std::span<const double> profile_db, double fdT,
                               int symbol_count, std::uint64_t seed) {
  if (K < 1) throw ConfigError("gen_channel: K must be positive");
  if (symbol_count < 1) throw ConfigError("gen_channel: symbol_count must be positive");
  const RVec p = path_weights_from_db(profile_db);
  const int paths = static_cast<int>(p.size());
  const int max_delay = paths == 1 ? 0 : paths == 2 ? 4 : 5 + (paths - 3);
  if (max_delay >= L_p) {
    throw ConfigError("gen_channel: a " + std::to_string(paths) + "-path profile needs L_p >= " +
                      std::to_string(max_delay + 1));
  }

  ChannelRealization ch;
  ch.L_p = L_p;
  ch.symbols = symbol_count;
  ch.fdT = fdT;
  Rng rng(seed);
  for (int k = 0; k < K; ++k) {
    std::vector<int> d{0};
    if (paths >= 2) {
      const int tau2 = 1 + static_cast<int>(rng() % 4);
      d.push_back(tau2);
      if (paths >= 3) {
        const int tau3 = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(5 - tau2));
        d.push_back(tau2 + tau3);
      }
      for (int l = 3; l < paths; ++l) d.push_back(d.back() + 1);
    }
    CMat a(paths, symbol_count);
    for (int l = 0; l < paths; ++l) a.row(l) = doppler_process(fdT, symbol_count, rng).transpose();
    ch.delays.push_back(std::move(d));
    ch.path_weights.push_back(p);
    ch.fading.push_back(std::move(a));
  }
  return ch;
}

}  // namespace blinddf::sigmodel
