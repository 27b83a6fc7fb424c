#ifndef CBM_DYNAMICS_HPP
#define CBM_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/objectives.hpp"
#include "cbm/statistics.hpp"

namespace cbm {

/// Everything a trial needs besides its index.
struct SimulationSetup {
  SystemParams params;
  ObjectiveSpec objective;
  CutoffSpec cutoff;
  InitialSpec initial;
  /// Weight of the running sup e^{kappa t} Var recorded in TrajectoryStats.
  double kappa = 0.0;
};

/// Finite system, its coupled mean-field copies and the reference ensembles.
struct CoupledState {
  Ensemble x_sys, y_sys;
  Ensemble x_bar, y_bar;
  Ensemble x_ref, y_ref;
  /// RNG particle coordinate of each system row; copy row i shares it.
  std::vector<std::uint32_t> x_labels, y_labels;
  double t = 0.0;
  std::int64_t step_index = 0;
};

/// Consensus points feeding one step.
struct StepConsensus {
  Point sys_x, sys_y;  // from x_sys / y_sys
  Point mf_x, mf_y;    // from the reference ensembles
};

/// Reference consensus points for every step of one trial, plus the
/// reference moments at every record. The reference evolves independently
/// of the finite system, so one track serves every system size.
struct MeanFieldTrack {
  std::int64_t num_steps = 0;
  int record_stride = 1;
  std::vector<Point> cons_x, cons_y;  // per step 0 .. num_steps - 1
  MomentSeries v_x_ref, v_y_ref;      // per record
  double max_norm = 0.0;
  long long outside_ball = 0;
};

struct SimulationOptions {
  /// Test hook: drive the copies with the system consensus points.
  bool copies_use_system_consensus = false;
  /// false: evolve only the finite system (copies and reference are empty
  /// and their columns are NaN).
  bool track_mean_field = true;
  /// Test hook: sample the reference from the system's RNG coordinates, so
  /// with n_ref == n it starts identical to the system.
  bool reference_shares_system_init = false;
  /// Precomputed reference run; replaces the live reference ensembles.
  const MeanFieldTrack* track = nullptr;
  /// Called at every record with the state and its consensus points.
  std::function<void(const CoupledState&, const StepConsensus&)> observer;
};

/// A non-finite update. `partial()` holds the records taken before it.
class DynamicsError : public std::runtime_error {
 public:
  DynamicsError(std::int64_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::int64_t step() const { return step_; }
  TrajectoryStats& partial() { return partial_; }
  const TrajectoryStats& partial() const { return partial_; }

 private:
  std::int64_t step_;
  TrajectoryStats partial_;
};

bool is_record_step(std::int64_t k, std::int64_t num_steps, int stride);

CoupledState initial_state(const SimulationSetup& setup, std::uint32_t trial, const SimulationOptions& opt = {});

StepConsensus compute_consensus(const SimulationSetup& setup, const CoupledState& s,
                                const SimulationOptions& opt = {});

/// One synchronized Euler-Maruyama step with the given consensus points.
/// System and copy rows share their increments; the reference draws its own.
void advance_with(const SimulationSetup& setup, CoupledState& s, const StepConsensus& cons, std::uint32_t trial,
                  const SimulationOptions& opt = {});

void advance(const SimulationSetup& setup, CoupledState& s, std::uint32_t trial, const SimulationOptions& opt = {});

/// Runs a trial from t = 0 to t_end, recording every record_stride steps
/// (and at the final step).
TrajectoryStats simulate(const SimulationSetup& setup, std::uint32_t trial, const SimulationOptions& opt = {});

/// Runs only the reference ensembles of a trial.
MeanFieldTrack simulate_reference(const SimulationSetup& setup, std::uint32_t trial);

}  // namespace cbm

#endif  // CBM_DYNAMICS_HPP
