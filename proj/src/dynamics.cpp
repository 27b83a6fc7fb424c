#include "cbm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cbm/consensus.hpp"
#include "cbm/kernels.hpp"

namespace cbm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::uint32_t> iota_labels(int n) {
  std::vector<std::uint32_t> l(static_cast<std::size_t>(n));
  std::iota(l.begin(), l.end(), 0u);
  return l;
}

std::uint32_t step_coordinate(std::int64_t k) {
  if (k < 0 || k >= static_cast<std::int64_t>(kInitStep)) throw std::out_of_range("step index outside RNG range");
  return static_cast<std::uint32_t>(k);
}

struct Pair {
  Point x, y;
};

// Consensus pair of a (min, max) ensemble pair.
Pair consensus_pair(const SimulationSetup& setup, const Ensemble& xs, const Ensemble& ys) {
  const Point mx = mean(xs);
  const Point my = mean(ys);
  return {consensus_min(xs, my, setup.objective, setup.params.alpha).point,
          consensus_max(ys, mx, setup.objective, setup.params.beta).point};
}

void check_status(const kernels::StepStatus& st, std::int64_t k, const char* which, long long& outside) {
  if (st.first_nonfinite_row >= 0)
    throw DynamicsError(k, std::string("non-finite update in ") + which + " row " +
                               std::to_string(st.first_nonfinite_row));
  outside += st.rows_outside_ball;
}

// Steps one ensemble with its own noise species.
void step_ensemble(const SimulationSetup& setup, Ensemble& e, const Point& m, double lambda, double sigma,
                   std::span<const double> noise, std::int64_t k, const char* which, long long& outside) {
  const auto st = kernels::omp::drift_diffusion_step(e, m, lambda, sigma, setup.cutoff, noise, setup.params.dt,
                                                     setup.params.project_to_ball);
  check_status(st, k, which, outside);
}

std::vector<double> draw(const SimulationSetup& setup, std::uint32_t trial, Species sp,
                         std::span<const std::uint32_t> labels, std::int64_t k, int dim) {
  std::vector<double> noise(labels.size() * static_cast<std::size_t>(dim));
  kernels::omp::fill_noise(RngStream(setup.params.seed), trial, sp, labels, step_coordinate(k), dim,
                           setup.params.dt, noise);
  return noise;
}

void step_reference(const SimulationSetup& setup, Ensemble& x_ref, Ensemble& y_ref, const Point& mf_x,
                    const Point& mf_y, std::uint32_t trial, std::int64_t k, long long& outside) {
  const auto& p = setup.params;
  const auto lx = iota_labels(x_ref.n);
  const auto ly = iota_labels(y_ref.n);
  const auto nx = draw(setup, trial, Species::XRef, lx, k, x_ref.dim);
  const auto ny = draw(setup, trial, Species::YRef, ly, k, y_ref.dim);
  step_ensemble(setup, x_ref, mf_x, p.lambda1, p.sigma1, nx, k, "x_ref", outside);
  step_ensemble(setup, y_ref, mf_y, p.lambda2, p.sigma2, ny, k, "y_ref", outside);
}

void push_moments(MomentSeries& s, const Ensemble* e) {
  if (e == nullptr) {
    for (auto& v : s) v.push_back(kNaN);
    return;
  }
  const Point m = mean(*e);
  for (std::size_t j = 0; j < kMomentOrders.size(); ++j)
    s[j].push_back(kernels::omp::central_moment(*e, m, kMomentOrders[j]));
}

void sample_reference(const SimulationSetup& setup, std::uint32_t trial, Ensemble& x_ref, Ensemble& y_ref,
                     bool share) {
  const auto& p = setup.params;
  const RngStream stream(p.seed);
  x_ref = sample_initial(setup.initial, p.n_ref, p.d1, p.r_cut, stream, trial, share ? Species::X : Species::XRef);
  y_ref = sample_initial(setup.initial, p.n_ref, p.d2, p.r_cut, stream, trial, share ? Species::Y : Species::YRef);
}

}  // namespace

bool is_record_step(std::int64_t k, std::int64_t num_steps, int stride) {
  return k == 0 || k == num_steps || (stride > 0 && k % stride == 0);
}

CoupledState initial_state(const SimulationSetup& setup, std::uint32_t trial, const SimulationOptions& opt) {
  const auto& p = setup.params;
  const RngStream stream(p.seed);
  CoupledState s;
  s.x_sys = sample_initial(setup.initial, p.n1, p.d1, p.r_cut, stream, trial, Species::X);
  s.y_sys = sample_initial(setup.initial, p.n2, p.d2, p.r_cut, stream, trial, Species::Y);
  s.x_labels = iota_labels(p.n1);
  s.y_labels = iota_labels(p.n2);
  if (opt.track_mean_field) {
    s.x_bar = s.x_sys;
    s.y_bar = s.y_sys;
    if (opt.track == nullptr) sample_reference(setup, trial, s.x_ref, s.y_ref, opt.reference_shares_system_init);
  }
  return s;
}

StepConsensus compute_consensus(const SimulationSetup& setup, const CoupledState& s, const SimulationOptions& opt) {
  StepConsensus c;
  auto sys = consensus_pair(setup, s.x_sys, s.y_sys);
  c.sys_x = std::move(sys.x);
  c.sys_y = std::move(sys.y);
  if (!opt.track_mean_field) return c;
  if (opt.track != nullptr) {
    if (s.step_index < opt.track->num_steps) {
      c.mf_x = opt.track->cons_x[static_cast<std::size_t>(s.step_index)];
      c.mf_y = opt.track->cons_y[static_cast<std::size_t>(s.step_index)];
    }
  } else if (!s.x_ref.empty()) {
    auto mf = consensus_pair(setup, s.x_ref, s.y_ref);
    c.mf_x = std::move(mf.x);
    c.mf_y = std::move(mf.y);
  }
  return c;
}

namespace {

long long advance_impl(const SimulationSetup& setup, CoupledState& s, const StepConsensus& cons, std::uint32_t trial,
                       const SimulationOptions& opt) {
  const auto& p = setup.params;
  const std::int64_t k = s.step_index;
  long long outside = 0;
  const auto nx = draw(setup, trial, Species::X, s.x_labels, k, p.d1);
  const auto ny = draw(setup, trial, Species::Y, s.y_labels, k, p.d2);
  step_ensemble(setup, s.x_sys, cons.sys_x, p.lambda1, p.sigma1, nx, k, "x_sys", outside);
  step_ensemble(setup, s.y_sys, cons.sys_y, p.lambda2, p.sigma2, ny, k, "y_sys", outside);
  if (opt.track_mean_field) {
    const bool hook = opt.copies_use_system_consensus;
    if (!hook && (cons.mf_x.empty() || cons.mf_y.empty()))
      throw std::logic_error("advance: mean-field consensus points missing");
    step_ensemble(setup, s.x_bar, hook ? cons.sys_x : cons.mf_x, p.lambda1, p.sigma1, nx, k, "x_bar", outside);
    step_ensemble(setup, s.y_bar, hook ? cons.sys_y : cons.mf_y, p.lambda2, p.sigma2, ny, k, "y_bar", outside);
    if (opt.track == nullptr && !s.x_ref.empty())
      step_reference(setup, s.x_ref, s.y_ref, cons.mf_x, cons.mf_y, trial, k, outside);
  }
  ++s.step_index;
  s.t = static_cast<double>(s.step_index) * p.dt;
  return outside;
}

void record(const SimulationSetup& setup, const CoupledState& s, const StepConsensus& cons,
            const SimulationOptions& opt, std::size_t rec, TrajectoryStats& st) {
  const bool mf = opt.track_mean_field;
  const bool live_ref = mf && opt.track == nullptr;
  st.times.push_back(s.t);
  push_moments(st.v_x_sys, &s.x_sys);
  push_moments(st.v_y_sys, &s.y_sys);
  push_moments(st.v_x_bar, mf ? &s.x_bar : nullptr);
  push_moments(st.v_y_bar, mf ? &s.y_bar : nullptr);
  if (mf && !live_ref) {
    for (std::size_t j = 0; j < kMomentOrders.size(); ++j) {
      st.v_x_ref[j].push_back(opt.track->v_x_ref[j].at(rec));
      st.v_y_ref[j].push_back(opt.track->v_y_ref[j].at(rec));
    }
  } else {
    push_moments(st.v_x_ref, live_ref ? &s.x_ref : nullptr);
    push_moments(st.v_y_ref, live_ref ? &s.y_ref : nullptr);
  }
  st.d_x.push_back(mf ? coupling_distance(s.x_sys, s.x_bar) : kNaN);
  st.d_y.push_back(mf ? coupling_distance(s.y_sys, s.y_bar) : kNaN);
  st.consensus_x.push_back(cons.sys_x);
  st.consensus_y.push_back(cons.sys_y);
  const double w = std::exp(setup.kappa * s.t);
  const double wx = w * st.v_x_sys[0].back();
  const double wy = w * st.v_y_sys[0].back();
  st.sup_weighted_var_x.push_back(st.sup_weighted_var_x.empty() ? wx : std::max(st.sup_weighted_var_x.back(), wx));
  st.sup_weighted_var_y.push_back(st.sup_weighted_var_y.empty() ? wy : std::max(st.sup_weighted_var_y.back(), wy));
  for (const Ensemble* e : {&s.x_sys, &s.y_sys, &s.x_bar, &s.y_bar, &s.x_ref, &s.y_ref})
    if (!e->empty()) st.max_norm = std::max(st.max_norm, max_row_norm(*e));
}

}  // namespace

void advance_with(const SimulationSetup& setup, CoupledState& s, const StepConsensus& cons, std::uint32_t trial,
                  const SimulationOptions& opt) {
  advance_impl(setup, s, cons, trial, opt);
}

void advance(const SimulationSetup& setup, CoupledState& s, std::uint32_t trial, const SimulationOptions& opt) {
  advance_impl(setup, s, compute_consensus(setup, s, opt), trial, opt);
}

TrajectoryStats simulate(const SimulationSetup& setup, std::uint32_t trial, const SimulationOptions& opt) {
  const auto& p = setup.params;
  const std::int64_t steps = p.num_steps();
  if (opt.track != nullptr && (opt.track->num_steps != steps || opt.track->record_stride != p.record_stride))
    throw std::invalid_argument("simulate: mean-field track does not match the time grid");
  TrajectoryStats st;
  CoupledState s = initial_state(setup, trial, opt);
  std::size_t rec = 0;
  try {
    for (std::int64_t k = 0;; ++k) {
      StepConsensus cons;
      try {
        cons = compute_consensus(setup, s, opt);
      } catch (const std::domain_error& e) {
        throw DynamicsError(k, std::string("consensus: ") + e.what());
      }
      if (is_record_step(k, steps, p.record_stride)) {
        record(setup, s, cons, opt, rec++, st);
        if (opt.observer) opt.observer(s, cons);
      }
      if (k == steps) break;
      st.outside_ball += advance_impl(setup, s, cons, trial, opt);
    }
  } catch (DynamicsError& e) {
    e.partial() = st;
    throw;
  }
  if (opt.track != nullptr) {
    st.max_norm = std::max(st.max_norm, opt.track->max_norm);
    st.outside_ball += opt.track->outside_ball;
  }
  return st;
}

MeanFieldTrack simulate_reference(const SimulationSetup& setup, std::uint32_t trial) {
  const auto& p = setup.params;
  MeanFieldTrack tr;
  tr.num_steps = p.num_steps();
  tr.record_stride = p.record_stride;
  Ensemble x_ref, y_ref;
  sample_reference(setup, trial, x_ref, y_ref, false);
  for (std::int64_t k = 0;; ++k) {
    if (is_record_step(k, tr.num_steps, p.record_stride)) {
      push_moments(tr.v_x_ref, &x_ref);
      push_moments(tr.v_y_ref, &y_ref);
      tr.max_norm = std::max({tr.max_norm, max_row_norm(x_ref), max_row_norm(y_ref)});
    }
    if (k == tr.num_steps) break;
    auto mf = consensus_pair(setup, x_ref, y_ref);
    step_reference(setup, x_ref, y_ref, mf.x, mf.y, trial, k, tr.outside_ball);
    tr.cons_x.push_back(std::move(mf.x));
    tr.cons_y.push_back(std::move(mf.y));
  }
  return tr;
}

}  // namespace cbm
