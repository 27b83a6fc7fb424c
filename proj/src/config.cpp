#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "cbm/harness.hpp"

namespace cbm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int line, const std::string& key) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(line, key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& v, int line, const std::string& key) {
  long long out = 0;
  const char* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(line, key + ": expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& v, int line, const std::string& key) {
  const long long x = to_integer(v, line, key);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError(line, key + ": integer out of range");
  return static_cast<int>(x);
}

bool to_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(line, key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> list_items(const std::string& v) {
  std::vector<std::string> items;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

using Setter = std::function<void(RunConfig&, const std::string&, int, const std::string&)>;

template <class F>
Setter num(F field) {
  return [field](RunConfig& c, const std::string& v, int line, const std::string& key) {
    field(c) = to_double(v, line, key);
  };
}

template <class F>
Setter integer(F field) {
  return [field](RunConfig& c, const std::string& v, int line, const std::string& key) {
    field(c) = to_int(v, line, key);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment", [](RunConfig& c, const std::string& v, int line, const std::string&) {
         try {
           c.experiment = parse_experiment(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(line, e.what());
         }
       }},
      {"trials", integer([](RunConfig& c) -> int& { return c.trials; })},
      {"output_dir", [](RunConfig& c, const std::string& v, int, const std::string&) { c.output_dir = v; }},
      {"params.lambda1", num([](RunConfig& c) -> double& { return c.params.lambda1; })},
      {"params.lambda2", num([](RunConfig& c) -> double& { return c.params.lambda2; })},
      {"params.sigma1", num([](RunConfig& c) -> double& { return c.params.sigma1; })},
      {"params.sigma2", num([](RunConfig& c) -> double& { return c.params.sigma2; })},
      {"params.alpha", num([](RunConfig& c) -> double& { return c.params.alpha; })},
      {"params.beta", num([](RunConfig& c) -> double& { return c.params.beta; })},
      {"params.r_cut", num([](RunConfig& c) -> double& { return c.params.r_cut; })},
      {"params.dt", num([](RunConfig& c) -> double& { return c.params.dt; })},
      {"params.t_end", num([](RunConfig& c) -> double& { return c.params.t_end; })},
      {"params.d1", integer([](RunConfig& c) -> int& { return c.params.d1; })},
      {"params.d2", integer([](RunConfig& c) -> int& { return c.params.d2; })},
      {"params.n1", integer([](RunConfig& c) -> int& { return c.params.n1; })},
      {"params.n2", integer([](RunConfig& c) -> int& { return c.params.n2; })},
      {"params.record_stride", integer([](RunConfig& c) -> int& { return c.params.record_stride; })},
      {"params.n_ref", [](RunConfig& c, const std::string& v, int line, const std::string& key) {
         if (v == "auto") {
           c.n_ref_auto = true;
         } else {
           c.n_ref_auto = false;
           c.params.n_ref = to_int(v, line, key);
         }
       }},
      {"params.seed", [](RunConfig& c, const std::string& v, int line, const std::string& key) {
         std::uint64_t s = 0;
         const char* end = v.data() + v.size();
         const auto [p, ec] = std::from_chars(v.data(), end, s);
         if (ec != std::errc() || p != end) throw ConfigError(line, key + ": expected an unsigned integer");
         c.params.seed = s;
       }},
      {"params.project_to_ball", [](RunConfig& c, const std::string& v, int line, const std::string& key) {
         c.params.project_to_ball = to_bool(v, line, key);
       }},
      {"objective.name", [](RunConfig& c, const std::string& v, int, const std::string&) { c.objective.name = v; }},
      {"objective.a", num([](RunConfig& c) -> double& { return c.objective.a; })},
      {"objective.b", num([](RunConfig& c) -> double& { return c.objective.b; })},
      {"objective.wiggle", num([](RunConfig& c) -> double& { return c.objective.wiggle; })},
      {"objective.coupling", [](RunConfig& c, const std::string& v, int line, const std::string& key) {
         c.objective.coupling.clear();
         for (const auto& item : list_items(v)) c.objective.coupling.push_back(to_double(item, line, key));
       }},
      {"objective.constants",
       [](RunConfig& c, const std::string& v, int, const std::string&) { c.objective.constants = v; }},
      {"objective.estimate_samples", integer([](RunConfig& c) -> int& { return c.objective.estimate_samples; })},
      {"cutoff.plateau_ratio", num([](RunConfig& c) -> double& { return c.plateau_ratio; })},
      {"initial.kind", [](RunConfig& c, const std::string& v, int line, const std::string&) {
         if (v == "uniform_ball") c.initial.kind = InitialKind::UniformBall;
         else if (v == "truncated_gaussian") c.initial.kind = InitialKind::TruncatedGaussian;
         else throw ConfigError(line, "initial.kind: expected uniform_ball or truncated_gaussian");
       }},
      {"initial.scale", num([](RunConfig& c) -> double& { return c.initial.gaussian_scale; })},
      {"sweep.ns", [](RunConfig& c, const std::string& v, int line, const std::string& key) {
         c.sweep_ns.clear();
         for (const auto& item : list_items(v)) c.sweep_ns.push_back(to_int(item, line, key));
       }},
      {"tail.threshold_a", num([](RunConfig& c) -> double& { return c.tail_threshold_a; })},
      {"tail.kappa_mode", [](RunConfig& c, const std::string& v, int, const std::string&) { c.tail_kappa_mode = v; }},
      {"tail.kappa", num([](RunConfig& c) -> double& { return c.tail_kappa; })},
      {"tail.q", integer([](RunConfig& c) -> int& { return c.tail_q; })},
      {"constants.c_mz_2", num([](RunConfig& c) -> double& { return c.constants.c_mz[2]; })},
      {"constants.c_mz_4", num([](RunConfig& c) -> double& { return c.constants.c_mz[4]; })},
      {"constants.c_mz_8", num([](RunConfig& c) -> double& { return c.constants.c_mz[8]; })},
      {"constants.c_bdg_2", num([](RunConfig& c) -> double& { return c.constants.c_bdg[2]; })},
      {"constants.c_bdg_4", num([](RunConfig& c) -> double& { return c.constants.c_bdg[4]; })},
  };
  return table;
}

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ParamError(field, what);
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
  if (name == "simulate") return Experiment::Simulate;
  if (name == "sweep") return Experiment::Sweep;
  if (name == "tail") return Experiment::Tail;
  if (name == "constants") return Experiment::Constants;
  if (name == "validate" || name == "validate-objective") return Experiment::Validate;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::Simulate: return "simulate";
    case Experiment::Sweep: return "sweep";
    case Experiment::Tail: return "tail";
    case Experiment::Constants: return "constants";
    case Experiment::Validate: return "validate";
  }
  return "?";
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::stringstream in(text);
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "empty key");
    if (value.empty()) throw ConfigError(line, key + ": empty value");
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(line, "unknown key '" + key + "'");
    if (const auto prev = seen.find(key); prev != seen.end())
      throw ConfigError(line, "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
    seen[key] = line;
    it->second(cfg, value, line, key);
  }
  resolve_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void resolve_config(RunConfig& cfg) {
  require(cfg.trials >= 1, "trials", "must be >= 1");
  require(!cfg.output_dir.empty(), "output_dir", "must not be empty");
  require(cfg.params.d1 >= 1, "params.d1", "must be >= 1");
  require(cfg.params.d2 >= 1, "params.d2", "must be >= 1");
  require(cfg.params.n1 >= 1, "params.n1", "must be >= 1");
  require(cfg.params.n2 >= 1, "params.n2", "must be >= 1");
  for (std::size_t i = 0; i < cfg.sweep_ns.size(); ++i) {
    require(cfg.sweep_ns[i] >= 1, "sweep.ns", "sizes must be >= 1");
    require(i == 0 || cfg.sweep_ns[i] > cfg.sweep_ns[i - 1], "sweep.ns", "must be strictly increasing");
  }
  const bool sized_by_sweep = cfg.experiment == Experiment::Sweep;
  int biggest = std::max(cfg.params.n1, cfg.params.n2);
  if (sized_by_sweep && !cfg.sweep_ns.empty()) biggest = std::max(biggest, cfg.sweep_ns.back());
  if (cfg.n_ref_auto) {
    require(biggest <= std::numeric_limits<int>::max() / kAutoReferenceFactor, "params.n_ref", "auto size overflows");
    cfg.params.n_ref = kAutoReferenceFactor * biggest;
  }
  if (sized_by_sweep && !cfg.sweep_ns.empty())
    require(cfg.params.n_ref >= kAutoReferenceFactor * cfg.sweep_ns.back(), "params.n_ref",
            "must be >= 16 * max(sweep.ns) for a sweep");

  const auto& o = cfg.objective;
  require(o.name == "quadratic_saddle" || o.name == "nonconvex_saddle", "objective.name",
          "expected quadratic_saddle or nonconvex_saddle");
  require(o.constants == "analytic" || o.constants == "estimated", "objective.constants",
          "expected analytic or estimated");
  require(!(o.name == "nonconvex_saddle" && o.constants == "analytic"), "objective.constants",
          "nonconvex_saddle constants are estimated only");
  require(o.estimate_samples >= 1000, "objective.estimate_samples", "must be >= 1000");
  require(std::isfinite(o.a) && o.a > 0, "objective.a", "must be finite and > 0");
  require(std::isfinite(o.b) && o.b > 0, "objective.b", "must be finite and > 0");
  require(std::isfinite(o.wiggle) && o.wiggle >= 0, "objective.wiggle", "must be finite and >= 0");
  for (double v : o.coupling) require(std::isfinite(v), "objective.coupling", "entries must be finite");
  if (o.name == "quadratic_saddle") {
    const std::size_t full = static_cast<std::size_t>(cfg.params.d1) * cfg.params.d2;
    require(o.coupling.size() == full || (o.coupling.size() == 1 && cfg.params.d1 == cfg.params.d2),
            "objective.coupling", "expected d1*d2 entries, or one value when d1 == d2");
  } else {
    require(cfg.params.d1 == cfg.params.d2, "params.d2", "nonconvex_saddle needs d1 == d2");
  }
  require(std::isfinite(cfg.plateau_ratio) && cfg.plateau_ratio > 0 && cfg.plateau_ratio < 1,
          "cutoff.plateau_ratio", "must lie in (0, 1)");
  require(std::isfinite(cfg.initial.gaussian_scale), "initial.scale", "must be finite");
  require(std::isfinite(cfg.tail_threshold_a) && cfg.tail_threshold_a >= 0, "tail.threshold_a",
          "must be finite and >= 0");
  require(cfg.tail_kappa_mode == "from_constants" || cfg.tail_kappa_mode == "explicit", "tail.kappa_mode",
          "expected from_constants or explicit");
  require(std::isfinite(cfg.tail_kappa), "tail.kappa", "must be finite");
  require(cfg.tail_q == 2 || cfg.tail_q == 4, "tail.q", "expected 2 or 4");
  for (const auto& [p, v] : cfg.constants.c_mz)
    require(std::isfinite(v) && v > 0, "constants.c_mz", "values must be finite and > 0");
  for (const auto& [p, v] : cfg.constants.c_bdg)
    require(std::isfinite(v) && v > 0, "constants.c_bdg", "values must be finite and > 0");

  // Field-level checks of the system parameters (conditions are reported later).
  validate_params(cfg.params, ObjectiveConstants{}, CutoffSpec::make(cfg.params.r_cut > 0 ? cfg.params.r_cut : 1.0,
                                                                       cfg.plateau_ratio));
  require(cfg.params.num_steps() < static_cast<std::int64_t>(kInitStep), "params.t_end",
          "t_end / dt exceeds the step range of the random streams");
}

}  // namespace cbm
