#include <doctest.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "cbm/consensus.hpp"
#include "cbm/dynamics.hpp"

using namespace cbm;

namespace {

SimulationSetup small_setup(int n = 32, int n_ref = 256) {
  SimulationSetup s;
  s.params.n1 = s.params.n2 = n;
  s.params.n_ref = n_ref;
  s.params.t_end = 1.0;
  s.params.record_stride = 5;
  s.params.seed = 17;
  s.objective = quadratic_saddle(1, 1, 2, 1.0);
  s.cutoff = CutoffSpec::make(s.params.r_cut);
  return s;
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_stats(const TrajectoryStats& a, const TrajectoryStats& b) {
  const auto ca = a.columns(), cb = b.columns();
  if (ca.size() != cb.size()) return false;
  for (std::size_t c = 0; c < ca.size(); ++c) {
    if (ca[c].first != cb[c].first || ca[c].second.size() != cb[c].second.size()) return false;
    for (std::size_t r = 0; r < ca[c].second.size(); ++r)
      if (!bits_equal(ca[c].second[r], cb[c].second[r])) return false;
  }
  return bits_equal(a.max_norm, b.max_norm) && a.outside_ball == b.outside_ball;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("degenerate dynamics contract every variance geometrically") {
  auto s = small_setup(40, 40);
  s.params.sigma1 = s.params.sigma2 = 0.0;
  s.params.alpha = s.params.beta = 0.0;
  s.params.lambda2 = 2.0;
  s.params.record_stride = 1;
  const auto st = simulate(s, 0);
  REQUIRE(st.size() == 101);
  double worst = 0.0;
  for (std::size_t k = 0; k < st.size(); ++k) {
    const double fx = std::pow(1.0 - s.params.lambda1 * s.params.dt, 2.0 * static_cast<double>(k));
    const double fy = std::pow(1.0 - s.params.lambda2 * s.params.dt, 2.0 * static_cast<double>(k));
    for (const auto* series : {&st.v_x_sys, &st.v_x_bar, &st.v_x_ref})
      worst = std::max(worst, rel((*series)[0][k], fx * (*series)[0][0]));
    for (const auto* series : {&st.v_y_sys, &st.v_y_bar, &st.v_y_ref})
      worst = std::max(worst, rel((*series)[0][k], fy * (*series)[0][0]));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("copies fed the system consensus stay on the system") {
  auto s = small_setup();
  s.params.sigma1 = s.params.sigma2 = 0.4;
  SimulationOptions opt;
  opt.copies_use_system_consensus = true;
  s.params.record_stride = 1;
  const auto st = simulate(s, 2, opt);
  for (std::size_t k = 0; k < st.size(); ++k) {
    REQUIRE(st.d_x[k] == 0.0);
    REQUIRE(st.d_y[k] == 0.0);
  }
  // Without the hook the copies separate.
  const auto free_run = simulate(s, 2);
  CHECK(free_run.d_x.back() > 0.0);
}

TEST_CASE("reference started on the system ensemble with no noise") {
  auto s = small_setup(48, 48);
  s.params.sigma1 = s.params.sigma2 = 0.0;
  s.params.alpha = s.params.beta = 0.0;
  SimulationOptions opt;
  opt.reference_shares_system_init = true;
  const auto st = simulate(s, 0, opt);
  for (std::size_t k = 0; k < st.size(); ++k) {
    CHECK(st.d_x[k] == 0.0);
    CHECK(st.d_y[k] == 0.0);
  }
}

TEST_CASE("zero horizon gives one record") {
  auto s = small_setup();
  s.params.t_end = 0.0;
  const auto st = simulate(s, 0);
  REQUIRE(st.size() == 1);
  CHECK(st.times[0] == 0.0);
  CHECK(st.d_x[0] == 0.0);
  CHECK(st.d_y[0] == 0.0);
}

TEST_CASE("record grid") {
  auto s = small_setup();
  s.params.t_end = 0.23;  // 23 steps, stride 5
  int calls = 0;
  SimulationOptions opt;
  opt.observer = [&](const CoupledState&, const StepConsensus&) { ++calls; };
  const auto st = simulate(s, 0, opt);
  CHECK(st.size() == 6);
  CHECK(calls == 6);
  CHECK(st.times.back() == doctest::Approx(0.23));
  for (std::size_t k = 1; k < st.size(); ++k) CHECK(st.times[k] > st.times[k - 1]);
}

TEST_CASE("default run stays finite and inside the ball") {
  auto s = small_setup(64, 1024);
  s.params.t_end = 3.0;
  const auto st = simulate(s, 5);
  CHECK(st.max_norm <= s.params.r_cut);
  for (const auto& [name, col] : st.columns())
    for (double v : col) REQUIRE(std::isfinite(v));
  CHECK(st.outside_ball == 0);
  // Variances fall from their initial level.
  CHECK(st.v_x_sys[0].back() < st.v_x_sys[0].front());
}

TEST_CASE("projection off counts escapes instead") {
  auto s = small_setup(64, 64);
  s.params.project_to_ball = false;
  s.params.sigma1 = s.params.sigma2 = 3.0;
  s.params.dt = 0.05;
  s.cutoff = CutoffSpec::make(2.0, 0.99);
  const auto st = simulate(s, 0);
  CHECK(st.outside_ball > 0);
  auto on = s;
  on.params.project_to_ball = true;
  CHECK(simulate(on, 0).max_norm <= 2.0);
}

TEST_CASE("shared reference track reproduces the live run") {
  auto s = small_setup(24, 600);
  s.kappa = 0.3;
  const auto live = simulate(s, 3);
  const auto track = simulate_reference(s, 3);
  SimulationOptions opt;
  opt.track = &track;
  CHECK(same_stats(live, simulate(s, 3, opt)));

  auto other = s;
  other.params.t_end = 0.5;
  CHECK_THROWS_AS(simulate(other, 3, opt), std::invalid_argument);
}

TEST_CASE("runs are identical across thread counts") {
  auto s = small_setup(600, 1200);
  s.params.t_end = 0.2;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = simulate(s, 1);
  omp_set_num_threads(4);
  const auto four = simulate(s, 1);
  omp_set_num_threads(saved);
  CHECK(same_stats(one, four));
}

TEST_CASE("relabelling particles permutes the trajectory") {
  auto s = small_setup(16, 64);
  s.params.sigma1 = s.params.sigma2 = 0.5;
  CoupledState a = initial_state(s, 0);
  CoupledState b = a;
  std::vector<int> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[3], perm[9]);
  for (int i = 0; i < 16; ++i) {
    for (int k = 0; k < 2; ++k) {
      b.x_sys.row(i)[k] = a.x_sys.row(perm[i])[k];
      b.x_bar.row(i)[k] = a.x_bar.row(perm[i])[k];
    }
    b.x_labels[i] = a.x_labels[perm[i]];
  }
  for (int k = 0; k < 20; ++k) {
    advance(s, a, 0);
    advance(s, b, 0);
  }
  double worst = 0.0;
  for (int i = 0; i < 16; ++i)
    for (int k = 0; k < 2; ++k) {
      worst = std::max(worst, std::abs(b.x_sys.row(i)[k] - a.x_sys.row(perm[i])[k]));
      worst = std::max(worst, std::abs(b.x_bar.row(i)[k] - a.x_bar.row(perm[i])[k]));
    }
  CHECK(worst < 1e-12);
  // The opposing player only sees the mean of x, which is order independent up to rounding.
  for (std::size_t i = 0; i < a.y_sys.positions.size(); ++i)
    CHECK(std::abs(a.y_sys.positions[i] - b.y_sys.positions[i]) < 1e-12);
}

TEST_CASE("explicit scheme is first order without noise") {
  auto s = small_setup(16, 16);
  s.params.sigma1 = s.params.sigma2 = 0.0;
  const double horizon = 0.5;
  auto run = [&](double dt) {
    auto t = s;
    t.params.dt = dt;
    CoupledState st = initial_state(t, 0);
    const auto steps = std::llround(horizon / dt);
    for (long long k = 0; k < steps; ++k) advance(t, st, 0);
    return st.x_sys;
  };
  const auto ref = run(0.01 / 16);
  auto err = [&](double dt) {
    const auto e = run(dt);
    double d = 0.0;
    for (std::size_t i = 0; i < e.positions.size(); ++i) d = std::max(d, std::abs(e.positions[i] - ref.positions[i]));
    return d;
  };
  const double e1 = err(0.01), e2 = err(0.005), e3 = err(0.0025);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.2));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.25));

  // One step reproduces the drift field.
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    auto t = s;
    t.params.dt = dt;
    CoupledState st = initial_state(t, 0);
    const auto before = st.x_sys;
    const auto cons = compute_consensus(t, st);
    advance_with(t, st, cons, 0);
    for (int i = 0; i < before.n; ++i)
      for (int k = 0; k < 2; ++k) {
        const double fd = (st.x_sys.row(i)[k] - before.row(i)[k]) / dt;
        CHECK(fd == doctest::Approx(-t.params.lambda1 * (before.row(i)[k] - cons.sys_x[k])).epsilon(1e-9));
      }
  }
}

TEST_CASE("system-only runs skip the copies") {
  auto s = small_setup();
  SimulationOptions opt;
  opt.track_mean_field = false;
  const auto st = simulate(s, 0, opt);
  CHECK(std::isnan(st.d_x[0]));
  const auto full = simulate(s, 0);
  CHECK(st.v_x_sys == full.v_x_sys);
}

TEST_CASE("blow-up raises with the step index and keeps earlier records") {
  auto s = small_setup(8, 8);
  s.params.project_to_ball = false;
  s.params.lambda1 = 1e200;
  s.params.dt = 1.0;
  s.params.t_end = 10.0;
  s.params.record_stride = 1;
  try {
    simulate(s, 0);
    FAIL("expected DynamicsError");
  } catch (const DynamicsError& e) {
    CHECK(e.step() >= 1);
    CHECK(e.partial().size() >= 1);
  }
}
