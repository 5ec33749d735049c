// blinddf-sim: run blind receiver experiments, trained baselines, and
// convert result CSVs into plot data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "blinddf/harness.hpp"

namespace fs = std::filesystem;
using namespace blinddf;

namespace {

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> trials;
  int parallel = 1;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--config", a.config, "experiment config file")->required();
  cmd->add_option("--seed", a.seed, "root seed (overrides config)");
  cmd->add_option("--out", a.out, "output directory (overrides config)");
  cmd->add_option("--trials", a.trials, "trial count (overrides config)");
  cmd->add_option("--parallel", a.parallel, "worker threads")->check(CLI::PositiveNumber);
}

int execute(const RunArgs& a, bool baseline) {
  auto cfg = harness::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.out) cfg.output = *a.out;
  if (a.trials) cfg.trials = *a.trials;
  cfg.validate();

  const auto result = baseline ? harness::run_trained_baseline(cfg, a.parallel)
                               : harness::run_experiment(cfg, a.parallel);
  const fs::path dir(cfg.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::string stem = baseline ? "baseline" : "results";
  harness::emit_csv(harness::to_records(result), dir / (stem + ".csv"));
  const fs::path meta = dir / (stem + "_metadata.json");
  std::ofstream m(meta, std::ios::binary);
  if (!m) throw IoError("cannot open " + meta.string() + " for writing");
  m << harness::metadata_json(result);
  if (!m) throw IoError("write failed for " + meta.string());

  for (std::size_t s = 0; s < cfg.ebn0_db.size(); ++s) {
    for (std::size_t c = 0; c < result.chains.size(); ++c) {
      const auto& cnt = result.merged[s][c];
      std::cout << result.chains[c].algorithm_tag() << ' ' << result.chains[c].topology_tag()
                << " Eb/N0=" << cfg.ebn0_db[s] << " dB  BER=" << cnt.ber() << " ("
                << cnt.errors() << '/' << cnt.bits() << ")\n";
    }
  }
  std::cout << "wrote " << (dir / (stem + ".csv")).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blind adaptive decision-feedback multiuser receivers for DS-CDMA"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run the configured blind receiver chains");
  add_run_options(run, run_args);

  RunArgs base_args;
  auto* base = app.add_subcommand("baseline", "run trained NLMS/RLS linear receivers");
  add_run_options(base, base_args);

  std::string plot_in;
  std::string plot_mode;
  std::string plot_out;
  auto* plot = app.add_subcommand("plotdata", "convert a result CSV into x/ber blocks");
  plot->add_option("--in", plot_in, "result CSV")->required();
  plot->add_option("--mode", plot_mode, "vs_snr | vs_k | vs_user | convergence")->required();
  plot->add_option("--out", plot_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return execute(run_args, false);
    if (*base) return execute(base_args, true);
    const auto mode = harness::parse_plot_mode(plot_mode);
    harness::emit_plotdata(harness::read_csv(fs::path(plot_in)), mode, plot_out);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
