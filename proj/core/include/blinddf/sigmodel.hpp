#pragma once

// Signal model for a symbol-synchronous BPSK DS-CDMA uplink with per-user
// multipath: spreading codes, the structured code/constraint matrices, fading
// channels and the chip-rate received vector of one symbol interval.

#include <cstdint>
#include <span>
#include <vector>

#include "blinddf/rng.hpp"
#include "blinddf/types.hpp"

namespace blinddf::sigmodel {

inline constexpr int kGoldLength = 31;
inline constexpr int kGoldFamilySize = 33;

struct SpreadingEnsemble {
  int N = 0;
  int K = 0;
  int L_p = 0;  ///< 0 until build_structured_matrices() has run
  int L_s = 0;
  std::vector<RVec> codes;          ///< K codes, entries +-1/sqrt(N)
  std::vector<int> family_members;  ///< which Gold family member each code is
  std::vector<RMat> code_matrix;    ///< S_k, (L_s N) x L_s
  std::vector<RMat> constraint;     ///< C_k, M x L_p

  int M() const { return N + L_p - 1; }
  bool structured() const { return L_p > 0; }
};

/// The 33 binary (0/1) sequences of the degree-5 Gold family built from the
/// preferred pair of m-sequences with feedback taps [5,2] and [5,4,3,2].
/// Index 0 and 1 are the two m-sequences, index 2+s is their sum at shift s.
std::vector<std::vector<int>> gold_family_bits();

/// K distinct Gold codes of length N = 31; the seed picks the family members.
SpreadingEnsemble gen_gold_sequences(int N, int K, std::uint64_t seed);

/// Wrap caller-supplied codes (tests, custom ensembles). Codes must have equal
/// length and unit norm.
SpreadingEnsemble ensemble_from_codes(std::vector<RVec> codes);

/// ISI span for a given path count: 1 for L_p = 1, 2 for 1 < L_p <= N, 3 up to 2N.
int isi_span(int N, int L_p);

/// M x L_p matrix whose column j is the code delayed by j chips.
RMat constraint_matrix(const RVec& code, int L_p);

/// (L_s N) x L_s block-diagonal matrix repeating the code.
RMat code_matrix(const RVec& code, int L_s);

void build_structured_matrices(SpreadingEnsemble& ensemble, int L_p, int L_s);

/// Linear path amplitudes p_l from a dB power profile, normalized so that
/// sum p_l^2 = 1 (power convention p^2 proportional to 10^(dB/10)).
RVec path_weights_from_db(std::span<const double> profile_db);

/// Unit-power complex Gaussian fading sequence with the classical Doppler
/// spectrum c / sqrt(1 - (f/fd)^2), |f| < fd (cycles per symbol). fdT = 0
/// yields a constant gain.
CVec doppler_process(double fdT, int length, Rng& rng);

struct ChannelRealization {
  int L_p = 0;
  int symbols = 0;
  double fdT = 0.0;
  std::vector<RVec> path_weights;          ///< per user: p_l for each active path
  std::vector<std::vector<int>> delays;    ///< per user: absolute chip delay per path
  std::vector<CMat> fading;                ///< per user: paths x symbols, alpha_{k,l}(i)
  /// Ideal power control: each user's transmit amplitude tracks its channel
  /// so that ||h_k(i)|| = 1 at every symbol (equal received Eb/N0).
  bool power_controlled = false;

  int users() const { return static_cast<int>(delays.size()); }

  /// Tap vector h_k(i) of length L_p (zero for inactive taps, zero for i < 0),
  /// scaled to unit norm when power_controlled is set.
  CVec taps(int k, int i) const;

  /// M x (L_s N) channel matrix H_k(i). The first N columns act on the current
  /// symbol with h_k(i); the next N columns act on the previous symbol with
  /// h_k(i-1), keeping only its tail that spills into the window.
  CMat channel_matrix(int k, int i, int N, int L_s) const;
};

/// Random delays per user: path 1 at 0, path 2 at tau2 ~ U{1..4}, path 3 at
/// tau2 + tau3 with tau3 ~ U{1..5 - tau2}. Profiles with more than three
/// entries place further paths one chip after the previous one.
ChannelRealization gen_channel(int K, int L_p, std::span<const double> profile_db,
                               double fdT, int symbol_count, std::uint64_t seed);

struct NoiseModel {
  double sigma2 = 0.0;
  std::uint64_t rng_seed = 0;
};

struct TransmitFrame {
  RMat symbols;      ///< K x symbol_count, entries +-1
  RVec amplitudes;   ///< A_k
  std::vector<int> start;  ///< first symbol each user transmits (0 if always on)

  int users() const { return static_cast<int>(symbols.rows()); }
  int symbol_count() const { return static_cast<int>(symbols.cols()); }
  /// b_k(i), zero outside [start_k, symbol_count).
  double symbol(int k, int i) const;
};

TransmitFrame gen_frame(int K, int symbol_count, RVec amplitudes, std::vector<int> start,
                        std::uint64_t seed);

/// Noise-free r(i) restricted to the first `active` users.
CVec synthesize_clean(const TransmitFrame& frame, const SpreadingEnsemble& ensemble,
                      const ChannelRealization& channel, int i, int active);

/// r(i) = sum_k H_k(i) A_k S_k b_k(i) + n(i), n ~ CN(0, sigma2 I) drawn from rng.
CVec synthesize_received(const TransmitFrame& frame, const SpreadingEnsemble& ensemble,
                         const ChannelRealization& channel, double sigma2, int i,
                         int active, Rng& rng);

/// Per-dimension complex noise variance giving the requested Eb/N0 for a
/// user of amplitude A with unit-norm code and unit-power channel.
double noise_variance(double ebn0_db, double amplitude = 1.0);

}  // namespace blinddf::sigmodel
