#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "blinddf/harness.hpp"
#include "blinddf/sigmodel.hpp"

namespace blinddf::harness {

int ExperimentConfig::max_users() const {
  int k = 0;
  for (const auto& e : k_schedule) k = std::max(k, e.K);
  return k;
}

int ExperimentConfig::users_at(int i) const {
  int k = 0;
  for (const auto& e : k_schedule) {
    if (e.start <= i) k = e.K;
  }
  return k;
}

bool ExperimentConfig::in_settling(int i, int span) const {
  for (const auto& e : k_schedule) {
    if (i >= e.start && i < e.start + span) return true;
  }
  return false;
}

double ExperimentConfig::amplitude(int k) const {
  return amplitudes.empty() ? 1.0 : amplitudes.at(k);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  if (N != sigmodel::kGoldLength) fail("N must be 31 (Gold family of degree 5)");
  if (symbols < 1) fail("symbols must be positive");
  if (trials < 1) fail("trials must be positive");
  if (k_schedule.empty()) fail("k_schedule is empty");
  if (k_schedule.front().start != 0) fail("k_schedule must start at symbol 0");
  for (std::size_t e = 0; e < k_schedule.size(); ++e) {
    if (k_schedule[e].K < 1) fail("k_schedule entries must have K >= 1");
    if (k_schedule[e].start >= symbols) fail("k_schedule change point beyond the frame");
    if (e > 0 && k_schedule[e].start <= k_schedule[e - 1].start) {
      fail("k_schedule change points must be strictly increasing");
    }
    if (e > 0 && k_schedule[e].K < k_schedule[e - 1].K) {
      fail("k_schedule may only add users");
    }
  }
  if (max_users() > sigmodel::kGoldFamilySize) fail("more users than Gold codes (33)");
  if (L_p < 1 || L_p > 2 * N) fail("L_p out of range");
  if (power_profile_db.empty() || static_cast<int>(power_profile_db.size()) > L_p) {
    fail("power_profile_db must have between 1 and L_p entries");
  }
  if (!(fdT >= 0.0 && fdT < 0.5)) fail("fdT must be in [0, 0.5)");
  if (ebn0_db.empty()) fail("ebn0_db is empty");
  for (std::size_t j = 1; j < ebn0_db.size(); ++j) {
    if (!(ebn0_db[j] > ebn0_db[j - 1])) fail("ebn0_db must be strictly increasing");
  }
  if (!amplitudes.empty()) {
    if (static_cast<int>(amplitudes.size()) != max_users()) {
      fail("amplitudes must list one value per user (" + std::to_string(max_users()) + ")");
    }
    for (double a : amplitudes) {
      if (!(a > 0.0)) fail("amplitudes must be positive");
    }
  }
  if (criteria.empty() || algorithms.empty() || topologies.empty()) {
    fail("criterion, algorithm and topology need at least one entry each");
  }
  if (branches != 1 && branches != 2 && branches != 4 && branches != 8) {
    fail("branches must be 1, 2, 4 or 8");
  }
  if (stages != 1 && stages != 2) fail("stages must be 1 or 2");
  if (!(mu0_w >= 0.0) || !(mu0_f >= 0.0)) fail("step sizes must be nonnegative");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must be in (0, 1)");
  if (!(delta > 0.0)) fail("delta must be positive");
  if (!(nu > 0.0)) fail("nu must be positive");
  if (!(b_identity_threshold >= 0.0 && b_identity_threshold <= 1.0)) {
    fail("b_identity_threshold must be in [0, 1]");
  }
  if (transient < 0) fail("transient must be nonnegative");
  if (window < 1) fail("window must be positive");
  if (pilot < 0) fail("pilot must be nonnegative");
  if (!(nlms_mu > 0.0 && nlms_mu < 2.0)) fail("nlms_mu must be in (0, 2)");
  bool counted = false;
  for (int i = 0; i < symbols && !counted; ++i) counted = !in_settling(i, transient);
  if (!counted) fail("transient exclusion leaves no symbols to count");
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    out.push_back(trim(s.substr(pos, next == std::string_view::npos ? s.size() - pos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int x{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (v.empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

adaptrx::Criterion to_criterion(std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::toupper(c); });
  if (v == "CCM") return adaptrx::Criterion::CCM;
  if (v == "CMV") return adaptrx::Criterion::CMV;
  throw ConfigError("config: unknown criterion '" + v + "'");
}

adaptrx::Algorithm to_algorithm(std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::toupper(c); });
  if (v == "SG") return adaptrx::Algorithm::SG;
  if (v == "RLS") return adaptrx::Algorithm::RLS;
  throw ConfigError("config: unknown algorithm '" + v + "'");
}

std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& f) {
  std::string out;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    if (j) out += ",";
    out += f(xs[j]);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string val = trim(std::string_view(t).substr(eq + 1));
    if (key == "N") {
      c.N = to_int<int>(key, val);
    } else if (key == "k_schedule") {
      c.k_schedule.clear();
      for (const auto& item : split(val, ',')) {
        const auto at = item.find('@');
        if (at == std::string::npos) {
          c.k_schedule.push_back({to_int<int>(key, item), 0});
        } else {
          c.k_schedule.push_back({to_int<int>(key, trim(item.substr(0, at))),
                                  to_int<int>(key, trim(item.substr(at + 1)))});
        }
      }
    } else if (key == "K") {
      c.k_schedule = {{to_int<int>(key, val), 0}};
    } else if (key == "L_p") {
      c.L_p = to_int<int>(key, val);
    } else if (key == "power_profile_db") {
      c.power_profile_db = to_doubles(key, val);
    } else if (key == "fdT") {
      c.fdT = to_double(key, val);
    } else if (key == "ebn0_db") {
      c.ebn0_db = to_doubles(key, val);
    } else if (key == "amplitudes") {
      c.amplitudes = to_doubles(key, val);
    } else if (key == "power_control") {
      if (val == "ideal") {
        c.power_control = true;
      } else if (val == "none") {
        c.power_control = false;
      } else {
        throw ConfigError("config: 'power_control' expects ideal or none, got '" + val + "'");
      }
    } else if (key == "symbols") {
      c.symbols = to_int<int>(key, val);
    } else if (key == "trials") {
      c.trials = to_int<int>(key, val);
    } else if (key == "criterion") {
      c.criteria.clear();
      for (const auto& item : split(val, ',')) c.criteria.push_back(to_criterion(item));
    } else if (key == "algorithm") {
      c.algorithms.clear();
      for (const auto& item : split(val, ',')) c.algorithms.push_back(to_algorithm(item));
    } else if (key == "topology") {
      c.topologies.clear();
      for (const auto& item : split(val, ',')) c.topologies.push_back(detect::parse_topology(item));
    } else if (key == "branches") {
      c.branches = to_int<int>(key, val);
    } else if (key == "stages") {
      c.stages = to_int<int>(key, val);
    } else if (key == "mu0_w") {
      c.mu0_w = to_double(key, val);
    } else if (key == "mu0_f") {
      c.mu0_f = to_double(key, val);
    } else if (key == "normalized_steps") {
      c.normalized_steps = to_bool(key, val);
    } else if (key == "alpha") {
      c.alpha = to_double(key, val);
    } else if (key == "delta") {
      c.delta = to_double(key, val);
    } else if (key == "nu") {
      c.nu = to_double(key, val);
    } else if (key == "feedback_regressor") {
      if (val == "final") {
        c.regressor = FeedbackRegressor::Final;
      } else if (val == "first_branch") {
        c.regressor = FeedbackRegressor::FirstBranch;
      } else {
        throw ConfigError("config: 'feedback_regressor' expects final or first_branch, got '" + val + "'");
      }
    } else if (key == "b_identity_threshold") {
      c.b_identity_threshold = to_double(key, val);
    } else if (key == "seed") {
      c.seed = to_int<std::uint64_t>(key, val);
    } else if (key == "output") {
      c.output = val;
    } else if (key == "transient") {
      c.transient = to_int<int>(key, val);
    } else if (key == "window") {
      c.window = to_int<int>(key, val);
    } else if (key == "pilot") {
      c.pilot = to_int<int>(key, val);
    } else if (key == "nlms_mu") {
      c.nlms_mu = to_double(key, val);
    } else {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "N = " << c.N << "\n";
  o << "k_schedule = "
    << join(c.k_schedule, [](const LoadEpoch& e) {
         return std::to_string(e.K) + "@" + std::to_string(e.start);
       })
    << "\n";
  o << "L_p = " << c.L_p << "\n";
  o << "power_profile_db = " << join(c.power_profile_db, fmt) << "\n";
  o << "fdT = " << fmt(c.fdT) << "\n";
  o << "ebn0_db = " << join(c.ebn0_db, fmt) << "\n";
  if (!c.amplitudes.empty()) o << "amplitudes = " << join(c.amplitudes, fmt) << "\n";
  o << "power_control = " << (c.power_control ? "ideal" : "none") << "\n";
  o << "symbols = " << c.symbols << "\n";
  o << "trials = " << c.trials << "\n";
  o << "criterion = "
    << join(c.criteria, [](adaptrx::Criterion x) { return std::string(adaptrx::to_string(x)); })
    << "\n";
  o << "algorithm = "
    << join(c.algorithms, [](adaptrx::Algorithm x) { return std::string(adaptrx::to_string(x)); })
    << "\n";
  o << "topology = "
    << join(c.topologies, [](detect::TopologyKind x) { return std::string(detect::to_string(x)); })
    << "\n";
  o << "branches = " << c.branches << "\n";
  o << "stages = " << c.stages << "\n";
  o << "mu0_w = " << fmt(c.mu0_w) << "\n";
  o << "mu0_f = " << fmt(c.mu0_f) << "\n";
  o << "normalized_steps = " << (c.normalized_steps ? "true" : "false") << "\n";
  o << "alpha = " << fmt(c.alpha) << "\n";
  o << "delta = " << fmt(c.delta) << "\n";
  o << "nu = " << fmt(c.nu) << "\n";
  o << "feedback_regressor = "
    << (c.regressor == FeedbackRegressor::Final ? "final" : "first_branch") << "\n";
  o << "b_identity_threshold = " << fmt(c.b_identity_threshold) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "output = " << c.output << "\n";
  o << "transient = " << c.transient << "\n";
  o << "window = " << c.window << "\n";
  o << "pilot = " << c.pilot << "\n";
  o << "nlms_mu = " << fmt(c.nlms_mu) << "\n";
  return o.str();
}

}  // namespace blinddf::harness
