#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cbm/consensus.hpp"
#include "cbm/kernels.hpp"

using namespace cbm;

namespace {

Ensemble ensemble_1d(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Ensemble(n, 1, std::move(v));
}

Ensemble random_ensemble(const RngStream& s, std::uint32_t inst, int n, int d, double r, Species sp = Species::X) {
  return sample_initial({}, n, d, r, s, inst, sp);
}

double rel_err(const Point& a, const Point& b) {
  double num = 0, den = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace

TEST_CASE("mean") {
  CHECK(mean(ensemble_1d({4.5})) == Point{4.5});
  CHECK(mean(ensemble_1d({-1, 1})) == Point{0.0});
  CHECK(mean(ensemble_1d({1, 2, 3})) == Point{2.0});
  CHECK_THROWS_AS(mean(Ensemble(0, 2)), std::invalid_argument);
}

TEST_CASE("two-particle Boltzmann average") {
  const auto q = quadratic_saddle(1, 1, 1, 0.0);
  const auto e = ensemble_1d({0.0, 1.0});
  const double expected = std::exp(-0.5) / (1.0 + std::exp(-0.5));
  CHECK(expected == doctest::Approx(0.37754066879814546).epsilon(1e-15));
  const std::vector<double> zero{0.0};
  CHECK(consensus_min(e, zero, q, 1.0).point[0] == doctest::Approx(expected).epsilon(1e-14));
  CHECK(consensus_max(e, zero, q, 1.0).point[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("zero weight and single particle") {
  const auto q = quadratic_saddle(1, 1, 2, 1.0);
  const auto e = random_ensemble(RngStream(1), 0, 17, 2, 2.0);
  const Point m = mean(e);
  const std::vector<double> other{0.3, -0.2};
  CHECK(rel_err(consensus_min(e, other, q, 0.0).point, m) < 1e-15);
  CHECK(rel_err(consensus_max(e, other, q, 0.0).point, m) < 1e-15);
  CHECK(rel_err(consensus_naive(Side::Min, e, other, q, 0.0).point, m) < 1e-15);
  const Ensemble single(1, 2, {0.7, -1.1});
  CHECK(consensus_min(single, other, q, 40.0).point == Point{0.7, -1.1});
}

TEST_CASE("max player equals min player on the negated objective") {
  const auto q = quadratic_saddle(1.3, 0.7, 2, 0.4);
  auto neg = q;
  neg.eval = [q](Vec a, Vec b) { return -q.eval(b, a); };
  const RngStream s(6);
  for (std::uint32_t i = 0; i < 50; ++i) {
    const auto y = random_ensemble(s, i, 20, 2, 2.0);
    const std::vector<double> xm{0.1 * i / 50.0, -0.3};
    const auto a = consensus_max(y, xm, q, 3.0).point;
    const auto b = consensus_min(y, xm, neg, 3.0).point;
    CHECK(rel_err(a, b) < 1e-12);
  }
}

TEST_CASE("log-domain average matches the naive oracle") {
  const auto q = quadratic_saddle(1, 1, 2, 1.0);
  const RngStream s(12);
  double worst = 0.0;
  for (std::uint32_t i = 0; i < 1000; ++i) {
    const int n = 2 + static_cast<int>(i % 63);
    const auto e = random_ensemble(s, i, n, 2, 2.0);
    const auto other = random_ensemble(s, i, 1, 2, 2.0, Species::Y);
    const double alpha = 20.0 * s.at(i, Species::Aux, 0, 0).uniform(0);
    const Side side = i % 2 ? Side::Min : Side::Max;
    const auto a = consensus(side, e, other.row(0), q, alpha);
    const auto b = consensus_naive(side, e, other.row(0), q, alpha);
    worst = std::max(worst, rel_err(a.point, b.point));
    CHECK(std::isfinite(a.log_normalizer));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("huge weights overflow the naive oracle only") {
  const auto q = quadratic_saddle(1, 1, 1, 0.0);
  const auto e = ensemble_1d({-1.5, 0.2, 1.9});
  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(consensus_naive(Side::Max, e, zero, q, 1e6), std::overflow_error);
  CHECK_THROWS_AS(consensus_naive(Side::Min, e, zero, q, 1e6), std::overflow_error);
  const auto c = consensus_min(e, zero, q, 1e6);
  CHECK(c.point[0] == doctest::Approx(0.2));
  CHECK(std::isfinite(c.log_normalizer));
}

TEST_CASE("convex hull, shift invariance and concentration") {
  const auto q = quadratic_saddle(1, 1, 2, 1.0);
  auto shifted = q;
  shifted.eval = [q](Vec a, Vec b) { return q.eval(a, b) + 123.25; };
  const RngStream s(8);
  for (std::uint32_t i = 0; i < 200; ++i) {
    const auto e = random_ensemble(s, i, 30, 2, 2.0);
    const std::vector<double> other{0.5, 0.5};
    const auto c = consensus_min(e, other, q, 7.0).point;
    for (int k = 0; k < 2; ++k) {
      double lo = INFINITY, hi = -INFINITY;
      for (int r = 0; r < e.n; ++r) {
        lo = std::min(lo, e.row(r)[k]);
        hi = std::max(hi, e.row(r)[k]);
      }
      REQUIRE(c[k] >= lo);
      REQUIRE(c[k] <= hi);
    }
    CHECK(norm(c) <= 2.0);
    CHECK(rel_err(consensus_min(e, other, shifted, 7.0).point, c) < 1e-12);
  }

  const auto q1 = quadratic_saddle(1, 1, 1, 0.0);
  const auto e = ensemble_1d({-0.9, 0.45, 0.31, 1.7, -0.6});
  const std::vector<double> zero{0.0};
  CHECK(consensus_min(e, zero, q1, 1e3).point[0] == doctest::Approx(0.31).epsilon(1e-12));
}

TEST_CASE("mean-consensus gap bound") {
  const auto q = quadratic_saddle(1, 1, 2, 1.0);
  const double r = 2.0;
  const auto single = Ensemble(1, 2, {0.2, 0.1});
  const std::vector<double> other{0.0, 0.0};
  const auto g1 = check_mean_consensus_gap(Side::Min, single, other, q, 3.0, 2.0, q.constants.c_e, r);
  CHECK(g1.lhs == 0.0);
  CHECK(g1.rhs == 0.0);
  CHECK(g1.holds);

  const RngStream s(31);
  int violations = 0;
  for (std::uint32_t i = 0; i < 1000; ++i) {
    const int n = 2 + static_cast<int>(i % 63);
    const auto e = random_ensemble(s, i, n, 2, r);
    const auto o = random_ensemble(s, i, 1, 2, r, Species::Y);
    const double w = 10.0 * s.at(i, Species::Aux, 0, 0).uniform(0);
    const double p = i % 2 ? 2.0 : 4.0;
    const auto zero_w = check_mean_consensus_gap(Side::Min, e, o.row(0), q, 0.0, p, q.constants.c_e, r);
    REQUIRE(zero_w.lhs <= 1e-28);
    for (Side side : {Side::Min, Side::Max})
      if (!check_mean_consensus_gap(side, e, o.row(0), q, w, p, q.constants.c_e, r).holds) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("consensus stability bound") {
  const auto q = quadratic_saddle(1, 1, 2, 1.0);
  const double r = 2.0;
  const RngStream s(41);
  const auto mu = random_ensemble(s, 0, 20, 2, r);
  const std::vector<double> m2{0.1, 0.2};
  const auto same = check_consensus_stability(Side::Min, mu, mu, m2, m2, q, 4.0, q.constants, r);
  CHECK(same.lhs == 0.0);
  CHECK(same.holds);

  int violations = 0;
  for (std::uint32_t i = 0; i < 1000; ++i) {
    const int n = 2 + static_cast<int>(i % 63);
    const auto a = random_ensemble(s, i, n, 2, r);
    auto b = random_ensemble(s, i, n, 2, r, Species::XRef);
    // Mix: half of the instances are small perturbations of a.
    if (i % 2 == 0)
      for (std::size_t k = 0; k < b.positions.size(); ++k) b.positions[k] = a.positions[k] + 0.01 * b.positions[k];
    for (int row = 0; row < b.n; ++row) kernels::project_to_ball(b.row(row), r);
    const auto ya = random_ensemble(s, i, 1, 2, r, Species::Y);
    const auto yb = random_ensemble(s, i, 1, 2, r, Species::YRef);
    const double w = 10.0 * s.at(i, Species::Aux, 1, 0).uniform(0);
    const auto zero_w = check_consensus_stability(Side::Min, a, b, ya.row(0), yb.row(0), q, 0.0, q.constants, r);
    REQUIRE(zero_w.lhs <= 1e-14);
    for (Side side : {Side::Min, Side::Max})
      if (!check_consensus_stability(side, a, b, ya.row(0), yb.row(0), q, w, q.constants, r).holds) ++violations;
  }
  CHECK(violations == 0);
  CHECK(stability_constant(1.0, q.constants, 1.0) == doctest::Approx(3.0 * std::exp(16.0)));
}
