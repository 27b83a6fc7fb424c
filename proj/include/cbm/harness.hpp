#ifndef CBM_HARNESS_HPP
#define CBM_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/dynamics.hpp"
#include "cbm/objectives.hpp"
#include "cbm/statistics.hpp"

namespace cbm {

enum class Experiment { Simulate, Sweep, Tail, Constants, Validate };

Experiment parse_experiment(const std::string& name);
std::string experiment_name(Experiment e);

/// Syntax error in a config file.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ObjectiveConfig {
  std::string name = "quadratic_saddle";  // or nonconvex_saddle
  double a = 1.0;
  double b = 1.0;
  /// Row-major d1 x d2 coupling; a single value c means c * I.
  std::vector<double> coupling{1.0};
  double wiggle = 0.1;
  /// analytic (quadratic only) or estimated
  std::string constants = "analytic";
  int estimate_samples = 20000;
};

struct RunConfig {
  Experiment experiment = Experiment::Simulate;
  SystemParams params;
  /// n_ref = 16 max(n1, n2) (and max sweep N for sweeps).
  bool n_ref_auto = true;
  ObjectiveConfig objective;
  double plateau_ratio = 0.9;
  InitialSpec initial;
  int trials = 1;
  std::filesystem::path output_dir = ".";
  std::vector<int> sweep_ns{16, 32, 64, 128, 256};
  double tail_threshold_a = 1.0;
  std::string tail_kappa_mode = "from_constants";  // or explicit
  double tail_kappa = 0.0;
  int tail_q = 2;
  ConstantsInputs constants;
};

inline constexpr int kAutoReferenceFactor = 16;

/// Parses flat `key = value` text and resolves it. Throws ConfigError
/// (syntax, unknown key, with line number) or ParamError (value, with key).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Applies n_ref auto sizing and validates every field. Call again after
/// changing the experiment or seed.
void resolve_config(RunConfig& cfg);

ObjectiveSpec build_objective(const RunConfig& cfg);
CutoffSpec build_cutoff(const RunConfig& cfg);
ConstantsReport build_report(const RunConfig& cfg, const ObjectiveSpec& obj);
/// Weight of the running sup: the report's kappa clamped at 0, or the
/// explicit tail.kappa.
double effective_kappa(const RunConfig& cfg, const ConstantsReport& report);

struct TrialFailure {
  std::uint32_t trial = 0;
  int n = 0;
  std::string message;
};

struct ExperimentHooks {
  /// Sweep: replaces the measured sup error for size n.
  std::function<double(int n)> injected_error;
  /// Called at every record of every trial; must be thread-safe.
  std::function<void(std::uint32_t trial, const CoupledState&, const StepConsensus&)> observer;
  /// Write per-trial trajectory CSVs (simulate).
  bool write_trajectories = true;
};

struct SimulateResult {
  std::vector<TrajectoryStats> trials;  // successful trials, in trial order
  std::vector<TrialFailure> failures;
  RateFit decay;
  double c_rate_1_1 = 0.0;
  ConstantsReport report;
};

struct ScalingRow {
  int n = 0;
  double sup_mean_error = 0.0;
  double stderr_ = 0.0;
};

struct SweepResult {
  std::vector<ScalingRow> rows;
  LinearFit fit;
  std::map<int, std::vector<TrajectoryStats>> trials;  // per N
  std::vector<TrialFailure> failures;
  ConstantsReport report;
};

struct TailRow {
  int n = 0;
  double a = 0.0;
  double kappa = 0.0;
  TailEstimate estimate;
};

struct TailResult {
  std::vector<TailRow> rows;
  double var0 = 0.0;
  std::vector<TrialFailure> failures;
};

/// Across-trial mean and standard error of every trajectory column,
/// accumulated in trial order.
struct Summary {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> mean, se;  // [column][record]
};
Summary summarize(const std::vector<TrajectoryStats>& trials);

SimulateResult run_simulate(const RunConfig& cfg, const ExperimentHooks& hooks = {});
SweepResult run_sweep(const RunConfig& cfg, const ExperimentHooks& hooks = {});
TailResult run_tail(const RunConfig& cfg, const ExperimentHooks& hooks = {});
ConstantsReport run_constants(const RunConfig& cfg);
ConditionReport run_validate(const RunConfig& cfg);

/// Command-line entry point: 0 ok, 1 usage/config error, 2 runtime error.
int cli_main(int argc, char** argv);

}  // namespace cbm

#endif  // CBM_HARNESS_HPP
