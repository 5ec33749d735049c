#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "blinddf/chest.hpp"
#include "blinddf/harness.hpp"
#include "blinddf/rng.hpp"
#include "blinddf/sigmodel.hpp"
#include "trained.hpp"

namespace blinddf::harness {

std::string ChainSpec::algorithm_tag() const {
  switch (kind) {
    case ChainKind::TrainedNlms: return "NLMS-trained";
    case ChainKind::TrainedRls: return "RLS-trained";
    case ChainKind::Blind: break;
  }
  return std::string(adaptrx::to_string(criterion)) + "-" + std::string(adaptrx::to_string(algorithm));
}

std::string ChainSpec::topology_tag() const { return std::string(detect::to_string(topology)); }

std::vector<ChainSpec> blind_chains(const ExperimentConfig& config) {
  std::vector<ChainSpec> out;
  for (auto c : config.criteria) {
    for (auto a : config.algorithms) {
      for (auto t : config.topologies) out.push_back({ChainKind::Blind, c, a, t});
    }
  }
  return out;
}

std::vector<ChainSpec> trained_chains() {
  return {{ChainKind::TrainedNlms, adaptrx::Criterion::CMV, adaptrx::Algorithm::SG,
           detect::TopologyKind::Linear},
          {ChainKind::TrainedRls, adaptrx::Criterion::CMV, adaptrx::Algorithm::RLS,
           detect::TopologyKind::Linear}};
}

void ChainCounts::merge(const ChainCounts& o) {
  auto add = [](std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    if (a.size() < b.size()) a.resize(b.size(), 0);
    for (std::size_t j = 0; j < b.size(); ++j) a[j] += b[j];
  };
  add(user_errors, o.user_errors);
  add(user_bits, o.user_bits);
  add(symbol_errors, o.symbol_errors);
  add(symbol_bits, o.symbol_bits);
  pilot_errors += o.pilot_errors;
  pilot_bits += o.pilot_bits;
  divergence_resets += o.divergence_resets;
  step_fallbacks += o.step_fallbacks;
}

std::int64_t ChainCounts::errors() const {
  std::int64_t s = 0;
  for (auto e : user_errors) s += e;
  return s;
}

std::int64_t ChainCounts::bits() const {
  std::int64_t s = 0;
  for (auto b : user_bits) s += b;
  return s;
}

double ChainCounts::ber() const {
  const auto b = bits();
  return b > 0 ? static_cast<double>(errors()) / static_cast<double>(b) : 0.0;
}

namespace {

struct BlindChain {
  ChainSpec spec;
  adaptrx::ReceiverParams params;
  detect::DetectorTopology topo;
  std::vector<adaptrx::ReceiverState> set1;
  std::vector<adaptrx::ReceiverState> set2;
  std::vector<CVec> warm1;  ///< previous channel estimates (power-iteration start)
  std::vector<CVec> warm2;
  CMat W, F, W2, F2;
};

adaptrx::FeedbackMask mask_row(const Mask& m, int k) {
  adaptrx::FeedbackMask row(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(k, j);
  return row;
}

void grow(BlindChain& ch, int K, const ExperimentConfig& cfg,
          const sigmodel::SpreadingEnsemble& ens) {
  std::vector<double> powers(K);
  for (int k = 0; k < K; ++k) powers[k] = cfg.amplitude(k) * cfg.amplitude(k);
  ch.topo = detect::make_topology(ch.spec.topology, powers, cfg.branches, cfg.stages);
  const bool two_sets = detect::is_iterative(ch.spec.topology) && ch.topo.stages >= 2;
  auto extend = [&](std::vector<adaptrx::ReceiverState>& set, const Mask& mask) {
    for (int k = 0; k < static_cast<int>(set.size()); ++k) {
      adaptrx::resize_users(set[k], K, mask_row(mask, k));
    }
    for (int k = static_cast<int>(set.size()); k < K; ++k) {
      set.push_back(adaptrx::make_receiver(ch.params, ens.constraint[k], ens.codes[k], k, K,
                                           mask_row(mask, k)));
    }
  };
  extend(ch.set1, ch.topo.feedback_mask);
  if (two_sets) extend(ch.set2, ch.topo.stage2_mask);
  const int M = ens.M();
  ch.W.resize(M, K);
  ch.F.resize(K, K);
  if (two_sets) {
    ch.W2.resize(M, K);
    ch.F2.resize(K, K);
  }
}

void load_filters(const std::vector<adaptrx::ReceiverState>& set, CMat& W, CMat& F) {
  for (int k = 0; k < static_cast<int>(set.size()); ++k) {
    W.col(k) = set[k].w;
    F.col(k) = set[k].f;
  }
}

void adapt_set(std::vector<adaptrx::ReceiverState>& set, std::vector<CVec>& warm, const CVec& r,
               const RVec& b, const sigmodel::ChannelRealization& channel, int i) {
  warm.resize(set.size());
  for (int k = 0; k < static_cast<int>(set.size()); ++k) {
    const auto est = chest::estimate_channel(set[k].acc, k, &warm[k]);
    warm[k] = est.h_hat;
    const auto aligned = chest::align_phase(est, channel.taps(k, i));
    adaptrx::adapt(set[k], r, b, aligned.h_hat);
  }
}

void count(ChainCounts& c, const ExperimentConfig& cfg, const sigmodel::TransmitFrame& frame,
           const RVec& decisions, int i, int K, bool pilot) {
  std::int64_t errs = 0;
  const bool aggregate = !cfg.in_settling(i, cfg.transient) && !pilot;
  for (int k = 0; k < K; ++k) {
    const std::int64_t e = decisions[k] != frame.symbol(k, i) ? 1 : 0;
    errs += e;
    if (aggregate) {
      c.user_errors[k] += e;
      c.user_bits[k] += 1;
    }
  }
  c.symbol_errors[i] += errs;
  c.symbol_bits[i] += K;
  if (pilot) {
    c.pilot_errors += errs;
    c.pilot_bits += K;
  }
}

}  // namespace

CountTable run_trial(const ExperimentConfig& cfg, const std::vector<ChainSpec>& chains,
                     std::uint64_t trial_seed) {
  const int Kmax = cfg.max_users();
  auto ens = sigmodel::gen_gold_sequences(cfg.N, Kmax, derive_seed(trial_seed, 1));
  sigmodel::build_structured_matrices(ens, cfg.L_p, sigmodel::isi_span(cfg.N, cfg.L_p));
  auto channel = sigmodel::gen_channel(Kmax, cfg.L_p, cfg.power_profile_db, cfg.fdT,
                                       cfg.symbols, derive_seed(trial_seed, 2));
  channel.power_controlled = cfg.power_control;
  RVec amps(Kmax);
  std::vector<int> start(Kmax, 0);
  for (int k = 0; k < Kmax; ++k) {
    amps[k] = cfg.amplitude(k);
    for (const auto& e : cfg.k_schedule) {
      if (e.K > k) {
        start[k] = e.start;
        break;
      }
    }
  }
  const auto frame = sigmodel::gen_frame(Kmax, cfg.symbols, amps, start, derive_seed(trial_seed, 3));

  CountTable table(cfg.ebn0_db.size());
  for (std::size_t s = 0; s < cfg.ebn0_db.size(); ++s) {
    const double sigma2 = sigmodel::noise_variance(cfg.ebn0_db[s], 1.0);
    Rng noise(derive_seed(trial_seed, 100 + s));

    std::vector<BlindChain> blind;
    std::vector<trained::TrainedChain> sup;
    std::vector<int> slot(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      if (chains[c].kind == ChainKind::Blind) {
        BlindChain bc;
        bc.spec = chains[c];
        bc.params.criterion = chains[c].criterion;
        bc.params.algorithm = chains[c].algorithm;
        bc.params.nu = cfg.nu;
        bc.params.b_identity_threshold = cfg.b_identity_threshold;
        bc.params.mu0_w = cfg.mu0_w;
        bc.params.mu0_f = cfg.mu0_f;
        bc.params.normalized_steps = cfg.normalized_steps;
        bc.params.alpha = cfg.alpha;
        bc.params.delta = cfg.delta;
        slot[c] = static_cast<int>(blind.size());
        blind.push_back(std::move(bc));
      } else {
        slot[c] = static_cast<int>(sup.size());
        sup.push_back(trained::make_chain(chains[c].kind == ChainKind::TrainedRls, cfg.nlms_mu,
                                          cfg.alpha, cfg.delta));
      }
    }
    std::vector<ChainCounts> counts(chains.size());
    for (auto& c : counts) {
      c.user_errors.assign(Kmax, 0);
      c.user_bits.assign(Kmax, 0);
      c.symbol_errors.assign(cfg.symbols, 0);
      c.symbol_bits.assign(cfg.symbols, 0);
    }

    int K = 0;
    for (int i = 0; i < cfg.symbols; ++i) {
      const int Ki = cfg.users_at(i);
      if (Ki != K) {
        K = Ki;
        for (auto& bc : blind) grow(bc, K, cfg, ens);
        for (auto& tc : sup) trained::grow(tc, K, ens);
      }
      const CVec r = sigmodel::synthesize_received(frame, ens, channel, sigma2, i, K, noise);
      for (std::size_t c = 0; c < chains.size(); ++c) {
        if (chains[c].kind == ChainKind::Blind) {
          auto& bc = blind[slot[c]];
          load_filters(bc.set1, bc.W, bc.F);
          const bool two_sets = !bc.set2.empty();
          if (two_sets) load_filters(bc.set2, bc.W2, bc.F2);
          const auto rec = detect::detect(bc.topo, bc.W, bc.F, r, two_sets ? &bc.W2 : nullptr,
                                          two_sets ? &bc.F2 : nullptr);
          count(counts[c], cfg, frame, rec.final_decisions, i, K, false);
          const bool first = cfg.regressor == FeedbackRegressor::FirstBranch &&
                             !rec.branch_decisions.empty();
          adapt_set(bc.set1, bc.warm1, r, first ? rec.branch_decisions[0] : rec.final_decisions,
                    channel, i);
          if (two_sets) adapt_set(bc.set2, bc.warm2, r, rec.final_decisions, channel, i);
        } else {
          auto& tc = sup[slot[c]];
          const bool pilot = cfg.in_settling(i, cfg.pilot);
          RVec truth(K);
          for (int k = 0; k < K; ++k) truth[k] = frame.symbol(k, i);
          const RVec dec = trained::step(tc, r, truth, pilot);
          count(counts[c], cfg, frame, dec, i, K, pilot);
        }
      }
    }
    for (std::size_t c = 0; c < chains.size(); ++c) {
      if (chains[c].kind != ChainKind::Blind) continue;
      const auto& bc = blind[slot[c]];
      for (const auto* set : {&bc.set1, &bc.set2}) {
        for (const auto& rx : *set) {
          counts[c].divergence_resets += rx.divergence_resets;
          counts[c].step_fallbacks += rx.step_fallbacks;
        }
      }
    }
    table[s] = std::move(counts);
  }
  return table;
}

ExperimentResult run_chains(const ExperimentConfig& config, const std::vector<ChainSpec>& chains,
                            int parallel, bool keep_trials) {
  config.validate();
  if (chains.empty()) throw ConfigError("no receiver chains selected");
  std::vector<CountTable> trials(config.trials);
  const int workers = std::max(1, std::min(parallel, config.trials));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const int t = next.fetch_add(1);
      if (t >= config.trials) return;
      try {
        trials[t] = run_trial(config, chains, derive_seed(config.seed, static_cast<std::uint64_t>(t)));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = config.trials;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult res;
  res.config = config;
  res.chains = chains;
  res.merged.assign(config.ebn0_db.size(), std::vector<ChainCounts>(chains.size()));
  for (const auto& tab : trials) {
    for (std::size_t s = 0; s < tab.size(); ++s) {
      for (std::size_t c = 0; c < tab[s].size(); ++c) res.merged[s][c].merge(tab[s][c]);
    }
  }
  if (keep_trials) res.per_trial = std::move(trials);
  return res;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int parallel, bool keep_trials) {
  return run_chains(config, blind_chains(config), parallel, keep_trials);
}

ExperimentResult run_trained_baseline(const ExperimentConfig& config, int parallel,
                                      bool keep_trials) {
  return run_chains(config, trained_chains(), parallel, keep_trials);
}

}  // namespace blinddf::harness
