#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "blinddf/harness.hpp"

namespace blinddf::harness {

std::vector<BerRecord> to_records(const ExperimentResult& res) {
  const auto& cfg = res.config;
  std::vector<BerRecord> out;
  const int k_final = cfg.users_at(cfg.symbols - 1);
  for (std::size_t s = 0; s < res.merged.size(); ++s) {
    for (std::size_t c = 0; c < res.chains.size(); ++c) {
      const auto& cnt = res.merged[s][c];
      BerRecord base;
      base.algorithm = res.chains[c].algorithm_tag();
      base.topology = res.chains[c].topology_tag();
      base.snr_db = cfg.ebn0_db[s];
      base.k_active = k_final;
      for (int k = 0; k < static_cast<int>(cnt.user_bits.size()); ++k) {
        if (cnt.user_bits[k] == 0) continue;
        BerRecord r = base;
        r.user = k;
        r.errors = cnt.user_errors[k];
        r.bits = cnt.user_bits[k];
        out.push_back(std::move(r));
      }
      BerRecord avg = base;
      avg.errors = cnt.errors();
      avg.bits = cnt.bits();
      if (avg.bits > 0) out.push_back(avg);
      if (cnt.pilot_bits > 0) {
        BerRecord p = base;
        p.scope = BerRecord::Scope::Pilot;
        p.errors = cnt.pilot_errors;
        p.bits = cnt.pilot_bits;
        out.push_back(std::move(p));
      }
      std::int64_t we = 0;
      std::int64_t wb = 0;
      const int n = static_cast<int>(cnt.symbol_bits.size());
      for (int i = 0; i < n; ++i) {
        we += cnt.symbol_errors[i];
        wb += cnt.symbol_bits[i];
        if (i >= cfg.window) {
          we -= cnt.symbol_errors[i - cfg.window];
          wb -= cnt.symbol_bits[i - cfg.window];
        }
        if (i + 1 < cfg.window || wb == 0) continue;
        BerRecord r = base;
        r.scope = BerRecord::Scope::Symbol;
        r.symbol_index = i;
        r.k_active = cfg.users_at(i);
        r.errors = we;
        r.bits = wb;
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

namespace {

std::string g6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_csv(const std::vector<BerRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.algorithm << ',' << r.topology << ',' << g6(r.snr_db) << ',' << r.k_active << ',';
    switch (r.scope) {
      case BerRecord::Scope::Aggregate: out << "all"; break;
      case BerRecord::Scope::Pilot: out << "pilot"; break;
      case BerRecord::Scope::Symbol: out << r.symbol_index; break;
    }
    out << ',';
    if (r.user < 0) {
      out << "avg";
    } else {
      out << r.user + 1;
    }
    out << ',' << r.errors << ',' << r.bits << ',' << g6(r.ber()) << '\n';
  }
}

void emit_csv(const std::vector<BerRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(records, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<BerRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ConfigError("csv: missing or unexpected header");
  }
  std::vector<BerRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) throw ConfigError("csv line " + std::to_string(lineno) + ": expected 9 fields");
    try {
      BerRecord r;
      r.algorithm = f[0];
      r.topology = f[1];
      r.snr_db = std::stod(f[2]);
      r.k_active = std::stoi(f[3]);
      if (f[4] == "all") {
        r.scope = BerRecord::Scope::Aggregate;
      } else if (f[4] == "pilot") {
        r.scope = BerRecord::Scope::Pilot;
      } else {
        r.scope = BerRecord::Scope::Symbol;
        r.symbol_index = std::stoi(f[4]);
      }
      r.user = f[5] == "avg" ? -1 : std::stoi(f[5]) - 1;
      r.errors = std::stoll(f[6]);
      r.bits = std::stoll(f[7]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConfigError("csv line " + std::to_string(lineno) + ": malformed field");
    }
  }
  return out;
}

std::vector<BerRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_csv(in);
}

PlotMode parse_plot_mode(std::string_view text) {
  if (text == "vs_snr") return PlotMode::VsSnr;
  if (text == "vs_k") return PlotMode::VsK;
  if (text == "vs_user") return PlotMode::VsUser;
  if (text == "convergence") return PlotMode::Convergence;
  throw ConfigError("unknown plot mode '" + std::string(text) + "'");
}

void write_plotdata(const std::vector<BerRecord>& records, PlotMode mode, std::ostream& out) {
  // Group key -> (x, errors, bits); points with equal x are pooled.
  using Key = std::pair<std::string, double>;
  std::map<Key, std::map<double, std::pair<std::int64_t, std::int64_t>>> groups;
  std::vector<Key> order;
  const bool per_snr = mode == PlotMode::VsUser || mode == PlotMode::Convergence;
  for (const auto& r : records) {
    double x = 0.0;
    switch (mode) {
      case PlotMode::VsSnr:
        if (r.scope != BerRecord::Scope::Aggregate || r.user >= 0) continue;
        x = r.snr_db;
        break;
      case PlotMode::VsK:
        if (r.scope != BerRecord::Scope::Aggregate || r.user >= 0) continue;
        x = r.k_active;
        break;
      case PlotMode::VsUser:
        if (r.scope != BerRecord::Scope::Aggregate || r.user < 0) continue;
        x = r.user + 1;
        break;
      case PlotMode::Convergence:
        if (r.scope != BerRecord::Scope::Symbol) continue;
        x = r.symbol_index;
        break;
    }
    Key key{r.algorithm + " " + r.topology, per_snr ? r.snr_db : 0.0};
    if (!groups.count(key)) order.push_back(key);
    auto& pt = groups[key][x];
    pt.first += r.errors;
    pt.second += r.bits;
  }
  if (groups.empty()) {
    static const char* names[] = {"vs_snr", "vs_k", "vs_user", "convergence"};
    throw ConfigError(std::string("plotdata: no records match mode ") +
                      names[static_cast<int>(mode)]);
  }
  bool first = true;
  for (const auto& key : order) {
    if (!first) out << '\n';
    first = false;
    out << "# " << key.first;
    if (per_snr) out << " snr_db=" << g6(key.second);
    out << '\n';
    for (const auto& [x, eb] : groups[key]) {
      const double ber = eb.second > 0 ? static_cast<double>(eb.first) / eb.second : 0.0;
      out << g6(x) << ' ' << g6(ber) << '\n';
    }
  }
}

void emit_plotdata(const std::vector<BerRecord>& records, PlotMode mode,
                   const std::filesystem::path& path) {
  std::ostringstream buf;
  write_plotdata(records, mode, buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << buf.str();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string metadata_json(const ExperimentResult& res) {
  using nlohmann::json;
  const auto& c = res.config;
  json j;
  j["config_text"] = to_text(c);
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["symbols_per_trial"] = c.symbols;
  j["trial_seed_rule"] = "splitmix64 derivation of (seed, trial index)";
  j["aggregate_rule"] = "symbols within `transient` of each load change are excluded";
  j["transient"] = c.transient;
  j["convergence_window"] = c.window;
  j["user_index_base"] = 1;
  json schedule = json::array();
  for (const auto& e : c.k_schedule) schedule.push_back({{"K", e.K}, {"start", e.start}});
  j["k_schedule"] = schedule;
  json chains = json::array();
  for (std::size_t ch = 0; ch < res.chains.size(); ++ch) {
    json entry;
    entry["algorithm"] = res.chains[ch].algorithm_tag();
    entry["topology"] = res.chains[ch].topology_tag();
    std::int64_t resets = 0;
    std::int64_t fallbacks = 0;
    for (const auto& row : res.merged) {
      resets += row[ch].divergence_resets;
      fallbacks += row[ch].step_fallbacks;
    }
    entry["divergence_resets"] = resets;
    entry["step_size_fallbacks"] = fallbacks;
    chains.push_back(entry);
  }
  j["chains"] = chains;
  return j.dump(2) + "\n";
}

BerInterval wilson_interval(std::int64_t errors, std::int64_t bits) {
  BerInterval iv;
  if (bits <= 0) return iv;
  const double n = static_cast<double>(bits);
  const double p = static_cast<double>(errors) / n;
  const double zz = 1.959963984540054 * 1.959963984540054;
  const double denom = 1.0 + zz / n;
  const double centre = (p + zz / (2.0 * n)) / denom;
  const double half = std::sqrt(p * (1.0 - p) / n + zz / (4.0 * n * n)) * 1.959963984540054 / denom;
  iv.ber = p;
  iv.lo = std::max(0.0, centre - half);
  iv.hi = std::min(1.0, centre + half);
  return iv;
}

}  // namespace blinddf::harness
