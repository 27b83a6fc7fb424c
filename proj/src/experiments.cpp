#include <algorithm>
#include <cmath>
#include <optional>

#include "cbm/csv.hpp"
#include "cbm/harness.hpp"

namespace cbm {

namespace {

constexpr std::uint64_t kEstimateSeed = 0xC0FFEEULL;
constexpr double kConditionTolerance = 1e-9;

struct TrialOutcome {
  std::optional<TrajectoryStats> stats;
  bool ok = false;
  std::string error;
};

TrialOutcome run_trial(const SimulationSetup& setup, std::uint32_t trial, const SimulationOptions& opt) {
  TrialOutcome out;
  try {
    out.stats = simulate(setup, trial, opt);
    out.ok = true;
  } catch (DynamicsError& e) {
    out.stats = e.partial();
    out.error = e.what();
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

SimulationOptions options_for(const ExperimentHooks& hooks, std::uint32_t trial) {
  SimulationOptions opt;
  if (hooks.observer)
    opt.observer = [&hooks, trial](const CoupledState& s, const StepConsensus& c) { hooks.observer(trial, s, c); };
  return opt;
}

SimulationSetup make_setup(const RunConfig& cfg, const ObjectiveSpec& obj, const ConstantsReport& report) {
  SimulationSetup s;
  s.params = cfg.params;
  s.objective = obj;
  s.cutoff = build_cutoff(cfg);
  s.initial = cfg.initial;
  s.kappa = effective_kappa(cfg, report);
  return s;
}

void write_trajectory(const std::filesystem::path& path, std::uint32_t trial, const TrajectoryStats& st) {
  const auto cols = st.columns();
  std::vector<std::string> names{"trial"};
  for (const auto& c : cols) names.push_back(c.first);
  CsvWriter w(path, names);
  for (std::size_t r = 0; r < st.size(); ++r) {
    std::vector<double> row{static_cast<double>(trial)};
    for (const auto& c : cols) row.push_back(c.second[r]);
    w.row(row);
  }
  w.close();
}

void write_summary(const std::filesystem::path& path, const Summary& s) {
  std::vector<std::string> names{"t"};
  for (const auto& n : s.names) {
    names.push_back(n + "_mean");
    names.push_back(n + "_se");
  }
  CsvWriter w(path, names);
  for (std::size_t r = 0; r < s.times.size(); ++r) {
    std::vector<double> row{s.times[r]};
    for (std::size_t c = 0; c < s.names.size(); ++c) {
      row.push_back(s.mean[c][r]);
      row.push_back(s.se[c][r]);
    }
    w.row(row);
  }
  w.close();
}

void write_named(const std::filesystem::path& path, const std::vector<std::tuple<std::string, double, int>>& rows) {
  CsvWriter w(path, {"name", "value", "condition_flag"});
  for (const auto& [name, value, flag] : rows) w.row(std::vector<std::string>{name, format_double(value), std::to_string(flag)});
  w.close();
}

// Across-trial mean and standard error of per-record values.
std::pair<double, double> mean_se(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  const double m = sum / static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

std::vector<TrajectoryStats> successes(std::vector<TrialOutcome>& outcomes, int n,
                                       std::vector<TrialFailure>& failures) {
  std::vector<TrajectoryStats> ok;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    if (outcomes[r].ok) ok.push_back(std::move(*outcomes[r].stats));
    else failures.push_back({static_cast<std::uint32_t>(r), n, outcomes[r].error});
  }
  return ok;
}

}  // namespace

ObjectiveSpec build_objective(const RunConfig& cfg) {
  const auto& o = cfg.objective;
  const auto& p = cfg.params;
  if (o.name == "nonconvex_saddle") return nonconvex_saddle(o.wiggle, p.d1, p.r_cut, o.estimate_samples, kEstimateSeed);
  ObjectiveSpec obj = o.coupling.size() == 1 ? quadratic_saddle(o.a, o.b, p.d1, o.coupling.front())
                                             : quadratic_saddle(o.a, o.b, p.d1, p.d2, o.coupling);
  if (o.constants == "estimated")
    obj.constants = estimate_constants(obj, p.r_cut, o.estimate_samples, RngStream(kEstimateSeed));
  return obj;
}

CutoffSpec build_cutoff(const RunConfig& cfg) { return CutoffSpec::make(cfg.params.r_cut, cfg.plateau_ratio); }

ConstantsReport build_report(const RunConfig& cfg, const ObjectiveSpec& obj) {
  return constants_report(cfg.params, obj.constants, build_cutoff(cfg).grad_sup, cfg.constants);
}

double effective_kappa(const RunConfig& cfg, const ConstantsReport& report) {
  if (cfg.tail_kappa_mode == "explicit") return cfg.tail_kappa;
  return std::max(0.0, report.kappa);
}

Summary summarize(const std::vector<TrajectoryStats>& trials) {
  if (trials.empty()) throw std::invalid_argument("summarize: no trials");
  Summary s;
  s.times = trials.front().times;
  const auto first = trials.front().columns();
  for (std::size_t c = 1; c < first.size(); ++c) s.names.push_back(first[c].first);
  std::vector<std::vector<std::pair<std::string, std::vector<double>>>> cols;
  cols.reserve(trials.size());
  for (const auto& t : trials) {
    if (t.times != s.times) throw std::invalid_argument("summarize: trials on different time grids");
    cols.push_back(t.columns());
  }
  s.mean.assign(s.names.size(), std::vector<double>(s.times.size()));
  s.se = s.mean;
  std::vector<double> at(trials.size());
  for (std::size_t c = 0; c < s.names.size(); ++c)
    for (std::size_t r = 0; r < s.times.size(); ++r) {
      for (std::size_t k = 0; k < trials.size(); ++k) at[k] = cols[k][c + 1].second[r];
      std::tie(s.mean[c][r], s.se[c][r]) = mean_se(at);
    }
  return s;
}

SimulateResult run_simulate(const RunConfig& cfg, const ExperimentHooks& hooks) {
  const ObjectiveSpec obj = build_objective(cfg);
  SimulateResult res;
  res.report = build_report(cfg, obj);
  res.c_rate_1_1 = res.report.c_rate_1.at(1);
  const SimulationSetup setup = make_setup(cfg, obj, res.report);

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
#pragma omp parallel for schedule(dynamic, 1) if (cfg.trials > 1)
  for (int r = 0; r < cfg.trials; ++r) {
    const auto trial = static_cast<std::uint32_t>(r);
    outcomes[static_cast<std::size_t>(r)] = run_trial(setup, trial, options_for(hooks, trial));
  }

  std::filesystem::create_directories(cfg.output_dir);
  if (hooks.write_trajectories)
    for (std::size_t r = 0; r < outcomes.size(); ++r)
      if (outcomes[r].stats)
        write_trajectory(cfg.output_dir / ("trajectory_" + std::to_string(r) + ".csv"),
                         static_cast<std::uint32_t>(r), *outcomes[r].stats);

  res.trials = successes(outcomes, cfg.params.n1, res.failures);
  if (res.trials.empty()) throw std::runtime_error("simulate: every trial failed");
  const Summary sum = summarize(res.trials);
  write_summary(cfg.output_dir / "summary.csv", sum);

  // Decay of the mean system variance on [0, min(3, t_end)].
  const double t_max = std::min(3.0, cfg.params.t_end);
  std::vector<double> ts, vs;
  const auto col = static_cast<std::size_t>(
      std::find(sum.names.begin(), sum.names.end(), "v2_x_sys") - sum.names.begin());
  for (std::size_t r = 0; r < sum.times.size(); ++r)
    if (sum.times[r] <= t_max + 1e-12) {
      ts.push_back(sum.times[r]);
      vs.push_back(sum.mean[col][r]);
    }
  res.decay.rate = res.decay.intercept = res.decay.r2 = std::nan("");
  try {
    res.decay = fit_exponential_rate(ts, vs);
  } catch (const std::invalid_argument&) {
    // fewer than 3 usable records: the fit is reported as nan
  }
  write_named(cfg.output_dir / "decay_fit.csv", {{"rate", res.decay.rate, -1},
                                                 {"intercept", res.decay.intercept, -1},
                                                 {"r2", res.decay.r2, -1},
                                                 {"dropped", static_cast<double>(res.decay.dropped), -1},
                                                 {"points", static_cast<double>(ts.size()), -1},
                                                 {"t_max", t_max, -1},
                                                 {"c_rate_1(1)", res.c_rate_1_1, res.c_rate_1_1 > 0 ? 1 : 0}});
  return res;
}

SweepResult run_sweep(const RunConfig& cfg, const ExperimentHooks& hooks) {
  if (cfg.sweep_ns.size() < 3) throw ParamError("sweep.ns", "a sweep needs at least 3 sizes to fit a slope");
  const ObjectiveSpec obj = build_objective(cfg);
  SweepResult res;
  res.report = build_report(cfg, obj);
  const SimulationSetup base = make_setup(cfg, obj, res.report);
  const std::size_t n_sizes = cfg.sweep_ns.size();
  std::vector<std::vector<TrialOutcome>> outcomes(n_sizes, std::vector<TrialOutcome>(static_cast<std::size_t>(cfg.trials)));

  // One reference run per trial drives the copies at every size.
#pragma omp parallel for schedule(dynamic, 1) if (cfg.trials > 1)
  for (int r = 0; r < cfg.trials; ++r) {
    const auto trial = static_cast<std::uint32_t>(r);
    std::optional<MeanFieldTrack> track;
    std::string ref_error;
    try {
      track = simulate_reference(base, trial);
    } catch (const std::exception& e) {
      ref_error = std::string("reference: ") + e.what();
    }
    for (std::size_t j = 0; j < n_sizes; ++j) {
      auto& slot = outcomes[j][static_cast<std::size_t>(r)];
      if (!track) {
        slot.error = ref_error;
        continue;
      }
      SimulationSetup setup = base;
      setup.params.n1 = setup.params.n2 = cfg.sweep_ns[j];
      SimulationOptions opt = options_for(hooks, trial);
      opt.track = &*track;
      slot = run_trial(setup, trial, opt);
    }
  }

  std::filesystem::create_directories(cfg.output_dir);
  std::vector<double> ns, errs;
  for (std::size_t j = 0; j < n_sizes; ++j) {
    const int n = cfg.sweep_ns[j];
    auto ok = successes(outcomes[j], n, res.failures);
    if (ok.empty()) throw std::runtime_error("sweep: every trial failed at n = " + std::to_string(n));
    write_summary(cfg.output_dir / ("summary_n" + std::to_string(n) + ".csv"), summarize(ok));
    ScalingRow row;
    row.n = n;
    if (hooks.injected_error) {
      row.sup_mean_error = hooks.injected_error(n);
    } else {
      row.sup_mean_error = -INFINITY;
      std::vector<double> at(ok.size());
      for (std::size_t r = 0; r < ok.front().size(); ++r) {
        for (std::size_t k = 0; k < ok.size(); ++k) at[k] = ok[k].d_x[r] + ok[k].d_y[r];
        const auto [m, se] = mean_se(at);
        if (m > row.sup_mean_error) {
          row.sup_mean_error = m;
          row.stderr_ = se;
        }
      }
    }
    res.rows.push_back(row);
    res.trials[n] = std::move(ok);
    ns.push_back(n);
    errs.push_back(row.sup_mean_error);
  }
  res.fit = fit_scaling_slope(ns, errs);

  CsvWriter w(cfg.output_dir / "scaling.csv", {"n", "sup_mean_error", "stderr"});
  for (const auto& r : res.rows) w.row(std::vector<double>{static_cast<double>(r.n), r.sup_mean_error, r.stderr_});
  w.close();
  write_named(cfg.output_dir / "scaling_fit.csv", {{"slope", res.fit.slope, -1},
                                                   {"intercept", res.fit.intercept, -1},
                                                   {"r2", res.fit.r2, -1},
                                                   {"dropped", static_cast<double>(res.fit.dropped), -1}});
  return res;
}

TailResult run_tail(const RunConfig& cfg, const ExperimentHooks& hooks) {
  if (cfg.sweep_ns.empty()) throw ParamError("sweep.ns", "a tail study needs at least one size");
  const ObjectiveSpec obj = build_objective(cfg);
  const ConstantsReport report = build_report(cfg, obj);
  const SimulationSetup base = make_setup(cfg, obj, report);
  TailResult res;
  res.var0 = initial_moment(cfg.initial, cfg.params.d1, cfg.params.r_cut, 1.0);
  const double threshold = res.var0 + cfg.tail_threshold_a;

  std::filesystem::create_directories(cfg.output_dir);
  CsvWriter w(cfg.output_dir / "tail.csv", {"n", "a", "kappa", "p_hat", "wilson_lo", "wilson_hi"});
  for (int n : cfg.sweep_ns) {
    SimulationSetup setup = base;
    setup.params.n1 = setup.params.n2 = n;
    setup.params.n_ref = std::max(setup.params.n_ref, n);
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
#pragma omp parallel for schedule(dynamic, 1) if (cfg.trials > 1)
    for (int r = 0; r < cfg.trials; ++r) {
      const auto trial = static_cast<std::uint32_t>(r);
      SimulationOptions opt = options_for(hooks, trial);
      opt.track_mean_field = false;
      outcomes[static_cast<std::size_t>(r)] = run_trial(setup, trial, opt);
    }
    const auto ok = successes(outcomes, n, res.failures);
    if (ok.empty()) throw std::runtime_error("tail: every trial failed at n = " + std::to_string(n));
    std::vector<double> sups;
    sups.reserve(ok.size());
    for (const auto& st : ok) sups.push_back(st.sup_weighted_var_x.back());
    TailRow row{n, cfg.tail_threshold_a, setup.kappa, empirical_tail(sups, threshold)};
    w.row(std::vector<double>{static_cast<double>(n), row.a, row.kappa, row.estimate.p_hat, row.estimate.wilson_lo,
                              row.estimate.wilson_hi});
    res.rows.push_back(row);
  }
  w.close();
  return res;
}

ConstantsReport run_constants(const RunConfig& cfg) {
  const ObjectiveSpec obj = build_objective(cfg);
  const ConstantsReport report = build_report(cfg, obj);
  auto rows = report.rows();
  const ValidationReport v = validate_params(cfg.params, obj.constants, build_cutoff(cfg));
  for (const auto& c : v.conditions) {
    rows.emplace_back("condition." + c.name, c.lhs, c.holds ? 1 : 0);
    rows.emplace_back("condition." + c.name + ".rhs", c.rhs, -1);
  }
  std::filesystem::create_directories(cfg.output_dir);
  write_named(cfg.output_dir / "constants.csv", rows);
  return report;
}

ConditionReport run_validate(const RunConfig& cfg) {
  const ObjectiveSpec obj = build_objective(cfg);
  const ConditionReport rep = check_conditions(obj, cfg.params.r_cut, kConditionTolerance,
                                               cfg.objective.estimate_samples, RngStream(cfg.params.seed));
  auto ok = [](double margin) { return margin <= kConditionTolerance ? 1 : 0; };
  std::filesystem::create_directories(cfg.output_dir);
  write_named(cfg.output_dir / "conditions.csv",
              {{"lipschitz_margin", rep.lipschitz_margin, ok(rep.lipschitz_margin)},
               {"sandwich_margin", rep.sandwich_margin, ok(rep.sandwich_margin)},
               {"upper_growth_margin", rep.upper_growth_margin, ok(rep.upper_growth_margin)},
               {"lower_growth_margin", rep.lower_growth_margin, ok(rep.lower_growth_margin)},
               {"gap_lower_margin", rep.gap_lower_margin, ok(rep.gap_lower_margin)},
               {"gap_upper_margin", rep.gap_upper_margin, ok(rep.gap_upper_margin)},
               {"violations", static_cast<double>(rep.violations), rep.violations == 0 ? 1 : 0},
               {"samples", static_cast<double>(rep.n_samples), -1},
               {"l_e", obj.constants.l_e, -1},
               {"c_e", obj.constants.c_e, -1},
               {"c_upper", obj.constants.c_upper, -1},
               {"c_lower", obj.constants.c_lower, -1}});
  return rep;
}

}  // namespace cbm
