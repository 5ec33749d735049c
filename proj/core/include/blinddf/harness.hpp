#pragma once

// Monte Carlo orchestration: configuration, per-trial simulation of one or
// more receiver chains on a shared received signal, trained baselines,
// merging and CSV/plot-data output.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "blinddf/adaptrx.hpp"
#include "blinddf/detect.hpp"

namespace blinddf::harness {

struct LoadEpoch {
  int K = 0;
  int start = 0;  ///< first symbol index with this load
};

/// Decisions used as the feedback regressor when adapting SPA-based
/// first-stage filters.
enum class FeedbackRegressor { Final, FirstBranch };

struct ExperimentConfig {
  int N = 31;
  std::vector<LoadEpoch> k_schedule{{8, 0}};
  int L_p = 6;
  std::vector<double> power_profile_db{0.0, -3.0, -6.0};
  double fdT = 1e-4;
  std::vector<double> ebn0_db{15.0};
  std::vector<double> amplitudes;  ///< empty: equal received power
  bool power_control = true;       ///< ideal power control over the fading
  int symbols = 2000;
  int trials = 200;

  std::vector<adaptrx::Criterion> criteria{adaptrx::Criterion::CCM};
  std::vector<adaptrx::Algorithm> algorithms{adaptrx::Algorithm::RLS};
  std::vector<detect::TopologyKind> topologies{detect::TopologyKind::Linear};
  int branches = 4;
  int stages = 2;
  FeedbackRegressor regressor = FeedbackRegressor::Final;

  double mu0_w = 0.05;
  double mu0_f = 0.01;
  bool normalized_steps = true;
  double alpha = 0.998;
  double delta = 10.0;
  double nu = 1.0;
  double b_identity_threshold = 0.05;  ///< CMV-RLS: B ~ I below this running error rate

  std::uint64_t seed = 1;
  std::string output = "results";
  int transient = 200;  ///< excluded after every load change for aggregate BER
  int window = 100;     ///< sliding window for convergence curves

  int pilot = 200;        ///< trained baselines: pilot symbols after each load change
  double nlms_mu = 0.2;   ///< trained NLMS step

  int max_users() const;
  int users_at(int i) const;
  /// True when symbol i falls in the first `span` symbols after a load change.
  bool in_settling(int i, int span) const;
  double amplitude(int k) const;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

/// Parse the flat `key = value` format (`#` starts a comment, lists are
/// comma separated, schedules are `K@start` pairs).
ExperimentConfig parse_config(std::string_view text);
/// Throws IoError if unreadable, ConfigError if malformed.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

enum class ChainKind { Blind, TrainedNlms, TrainedRls };

struct ChainSpec {
  ChainKind kind = ChainKind::Blind;
  adaptrx::Criterion criterion = adaptrx::Criterion::CCM;
  adaptrx::Algorithm algorithm = adaptrx::Algorithm::RLS;
  detect::TopologyKind topology = detect::TopologyKind::Linear;

  std::string algorithm_tag() const;
  std::string topology_tag() const;
};

/// Cross product of the configured criteria, algorithms and topologies.
std::vector<ChainSpec> blind_chains(const ExperimentConfig& config);
/// Supervised NLMS and RLS linear receivers.
std::vector<ChainSpec> trained_chains();

/// Error counts of one chain at one Eb/N0.
struct ChainCounts {
  std::vector<std::int64_t> user_errors;  ///< aggregate window, per user
  std::vector<std::int64_t> user_bits;
  std::vector<std::int64_t> symbol_errors;  ///< per symbol index, summed over users
  std::vector<std::int64_t> symbol_bits;
  std::int64_t pilot_errors = 0;  ///< trained chains only
  std::int64_t pilot_bits = 0;
  std::int64_t divergence_resets = 0;
  std::int64_t step_fallbacks = 0;

  void merge(const ChainCounts& other);
  std::int64_t errors() const;
  std::int64_t bits() const;
  double ber() const;
};

/// counts[snr][chain]
using CountTable = std::vector<std::vector<ChainCounts>>;

/// Simulates one trial of every chain on a shared signal (common random
/// numbers across chains).
CountTable run_trial(const ExperimentConfig& config, const std::vector<ChainSpec>& chains,
                     std::uint64_t trial_seed);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ChainSpec> chains;
  CountTable merged;
  std::vector<CountTable> per_trial;  ///< filled when requested
};

/// Runs config.trials trials with seeds derive_seed(config.seed, t) on up to
/// `parallel` threads. Output is independent of `parallel`.
ExperimentResult run_experiment(const ExperimentConfig& config, int parallel = 1,
                                bool keep_trials = false);
ExperimentResult run_trained_baseline(const ExperimentConfig& config, int parallel = 1,
                                      bool keep_trials = false);
ExperimentResult run_chains(const ExperimentConfig& config, const std::vector<ChainSpec>& chains,
                            int parallel = 1, bool keep_trials = false);

struct BerRecord {
  enum class Scope { Aggregate, Symbol, Pilot };
  std::string algorithm;
  std::string topology;
  double snr_db = 0.0;
  int k_active = 0;
  Scope scope = Scope::Aggregate;
  int symbol_index = 0;  ///< Symbol scope only
  int user = -1;         ///< -1 for the user average
  std::int64_t errors = 0;
  std::int64_t bits = 0;

  double ber() const { return bits > 0 ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0; }
  bool operator==(const BerRecord&) const = default;
};

/// Per chain and Eb/N0: per-user and average aggregate records, pilot
/// records for trained chains, then sliding-window convergence records.
std::vector<BerRecord> to_records(const ExperimentResult& result);

inline constexpr std::string_view kCsvHeader =
    "algorithm,topology,snr_db,k_active,symbol_index,user,errors,bits,ber";

void write_csv(const std::vector<BerRecord>& records, std::ostream& out);
void emit_csv(const std::vector<BerRecord>& records, const std::filesystem::path& path);
std::vector<BerRecord> read_csv(std::istream& in);
std::vector<BerRecord> read_csv(const std::filesystem::path& path);

enum class PlotMode { VsSnr, VsK, VsUser, Convergence };
PlotMode parse_plot_mode(std::string_view text);

/// Two-column (x, ber) blocks, one per (algorithm, topology) group,
/// separated by blank lines and headed by a `# algorithm topology` comment.
void write_plotdata(const std::vector<BerRecord>& records, PlotMode mode, std::ostream& out);
void emit_plotdata(const std::vector<BerRecord>& records, PlotMode mode,
                   const std::filesystem::path& path);

/// JSON description of the run (configuration, counting rules, diagnostics).
std::string metadata_json(const ExperimentResult& result);

/// Binomial proportion with a two-sided 95% Wilson interval.
struct BerInterval {
  double ber = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
BerInterval wilson_interval(std::int64_t errors, std::int64_t bits);

}  // namespace blinddf::harness
