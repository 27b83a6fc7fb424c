#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <utility>

#include "cbm/csv.hpp"
#include "cbm/harness.hpp"

namespace cbm {

namespace {

void report_failures(const std::vector<TrialFailure>& failures) {
  for (const auto& f : failures)
    std::fprintf(stderr, "warning: trial %u (n = %d) failed: %s\n", f.trial, f.n, f.message.c_str());
}

void apply_threads(const std::optional<int>& flag) {
  int threads = 0;
  if (flag) {
    threads = *flag;
  } else if (const char* env = std::getenv("CBM_THREADS")) {
    threads = std::atoi(env);
    if (threads < 1) throw ParamError("CBM_THREADS", "must be a positive integer");
  }
  if (threads < 0) throw ParamError("--threads", "must be >= 1");
  if (threads > 0) omp_set_num_threads(threads);
}

int dispatch(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::Simulate: {
      const auto r = run_simulate(cfg);
      report_failures(r.failures);
      std::printf("trials: %zu ok, %zu failed\n", r.trials.size(), r.failures.size());
      std::printf("fitted decay rate of mean V2(x) on [0, %g]: %s (C_rate,1(1) = %s)\n",
                  std::min(3.0, cfg.params.t_end), format_double(r.decay.rate).c_str(),
                  format_double(r.c_rate_1_1).c_str());
      break;
    }
    case Experiment::Sweep: {
      const auto r = run_sweep(cfg);
      report_failures(r.failures);
      for (const auto& row : r.rows)
        std::printf("n = %-6d sup mean error = %s (se %s)\n", row.n, format_double(row.sup_mean_error).c_str(),
                    format_double(row.stderr_).c_str());
      std::printf("log-log slope: %s (r2 %s)\n", format_double(r.fit.slope).c_str(), format_double(r.fit.r2).c_str());
      break;
    }
    case Experiment::Tail: {
      const auto r = run_tail(cfg);
      report_failures(r.failures);
      std::printf("Var0 = %s, threshold = %s\n", format_double(r.var0).c_str(),
                  format_double(r.var0 + cfg.tail_threshold_a).c_str());
      for (const auto& row : r.rows)
        std::printf("n = %-6d p = %s  [%s, %s]  kappa = %s\n", row.n, format_double(row.estimate.p_hat).c_str(),
                    format_double(row.estimate.wilson_lo).c_str(), format_double(row.estimate.wilson_hi).c_str(),
                    format_double(row.kappa).c_str());
      break;
    }
    case Experiment::Constants: {
      const auto r = run_constants(cfg);
      std::printf("kappa = %s, zeta = %s, C_main = %s\n", format_double(r.kappa).c_str(),
                  format_double(r.zeta).c_str(), format_double(r.c_main).c_str());
      std::printf("note: C_MZ and C_BDG default to 1; C_tail and C_error are placeholders unless set.\n");
      break;
    }
    case Experiment::Validate: {
      const auto r = run_validate(cfg);
      std::printf("%d of %d sampled tuples violate a condition (worst margin %s)\n", r.violations, r.n_samples,
                  format_double(r.worst_margin()).c_str());
      break;
    }
  }
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"cbm-lab: consensus-based minimax particle experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  const std::pair<const char*, const char*> subcommands[] = {
      {"simulate", "coupled trajectories, summary and decay fit"},
      {"sweep", "sup-in-time coupling error against N and its log-log slope"},
      {"tail", "empirical tail of the sup-weighted variance"},
      {"constants", "explicit constants of the uniform-in-time bound"},
      {"validate-objective", "check the objective growth and smoothness conditions"}};
  for (const auto& [name, help] : subcommands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "config file (key = value lines)")->required();
    sub->add_option("--seed", seed, "override params.seed");
    sub->add_option("--out", out, "override output_dir");
    sub->add_option("--threads", threads, "worker threads (falls back to CBM_THREADS)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    RunConfig cfg = load_config(config_path);
    cfg.experiment = parse_experiment(app.get_subcommands().front()->get_name());
    if (seed) cfg.params.seed = *seed;
    if (out) cfg.output_dir = *out;
    resolve_config(cfg);
    apply_threads(threads);
    return dispatch(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const ParamError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace cbm
