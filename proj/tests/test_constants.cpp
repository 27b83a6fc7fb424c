#include <doctest.h>

#include <cmath>
#include <string>

#include "cbm/consensus.hpp"
#include "cbm/statistics.hpp"

using namespace cbm;

namespace {

// Straight transcription of the printed formulas for one player, used as
// an oracle in a regime where nothing overflows.
struct Oracle {
  double lambda, sigma, w, c_e, c_up, c_lo, l_e, r, grad;
  double mz2, mz4, mz8, bdg2, bdg4;

  double amp(double k) const { return 1.0 + std::exp(k * w * c_e * (1.0 + 2.0 * r * r)); }
  double rate(double q) const { return 2.0 * q * (lambda - (2.0 * q - 1.0) * sigma * sigma * amp(2.0)); }
  double tail(int q, double kappa) const {
    const double mz = q == 2 ? mz4 : mz8;
    const double bdg = q == 2 ? bdg2 : bdg4;
    const double degenerate = q == 2 ? 1.0 : std::pow(q - 2.0, -(q - 2.0) / 2.0);
    return std::pow(2.0, 3 * q) * mz +
           std::pow(2.0, 3 * q) * std::pow(sigma, q) * bdg * std::pow(rate(q) - q * kappa, -q / 2.0) * degenerate *
               std::sqrt(amp(2.0));
  }
  double bar_tail(int q, double kappa) const {
    const double mz = q == 2 ? mz4 : mz8;
    const double lead = std::pow(1.0 + sigma * sigma * std::pow(amp(1.0), 2) / (rate(1) - kappa), q);
    return std::pow(3.0, q) / std::pow(2.0, q) * tail(q, kappa) +
           lead * std::pow(2.0, 3 * q - 1) * std::pow(sigma, 2 * q) * std::pow(q - 1.0, q) /
               std::pow(rate(q) - q * kappa, q) * mz * std::exp(2.0 * q * w * (c_up + c_lo) * (1.0 + r * r)) *
               std::pow(amp(2.0), q);
  }
};

}  // namespace

TEST_CASE("noise-free collapse") {
  SystemParams p;
  p.lambda1 = p.lambda2 = 1.0;
  p.sigma1 = p.sigma2 = 0.0;
  const auto rep = constants_report(p, {1.0, 2.0, 1.0, 1.0}, 10.0);
  for (int q : {1, 2, 4}) {
    CHECK(rep.c_rate_1.at(q) == 2.0 * q);
    CHECK(rep.c_rate_2.at(q) == 2.0 * q);
  }
  CHECK(rep.kappa == 1.0);
  CHECK(rep.zeta == 0.5);
  CHECK(rep.c_main > 0.0);  // e^{C_decay / zeta} overflows here: the bound is +inf

  auto doubled = p;
  doubled.lambda1 = 2.0;
  const auto rep2 = constants_report(doubled, {1.0, 2.0, 1.0, 1.0}, 10.0);
  for (int q : {1, 2, 4}) CHECK(rep2.c_rate_1.at(q) == 2.0 * rep.c_rate_1.at(q));
}

TEST_CASE("single-formula hand evaluation") {
  const double v = c_rate(1, 3.0, 0.1, 1.0, 1.0, 1.0);
  CHECK(v == doctest::Approx(2.0 * (3.0 - 0.01 * (1.0 + std::exp(6.0)))).epsilon(1e-14));
  CHECK(v == doctest::Approx(-2.0885758698547026).epsilon(1e-12));
}

TEST_CASE("report matches a direct transcription") {
  SystemParams p;
  p.lambda1 = 3.0;
  p.lambda2 = 2.5;
  p.sigma1 = 0.1;
  p.sigma2 = 0.12;
  p.alpha = 0.1;
  p.beta = 0.08;
  p.r_cut = 1.0;
  const ObjectiveConstants oc{1.3, 0.5, 0.3, 0.2};
  ConstantsInputs in;
  in.c_mz = {{2, 2.0}, {4, 3.0}, {8, 5.0}};
  in.c_bdg = {{2, 1.5}, {4, 2.5}};
  const double grad = 10.0;
  const auto rep = constants_report(p, oc, grad, in);

  const Oracle o1{p.lambda1, p.sigma1, p.alpha, oc.c_e, oc.c_upper, oc.c_lower, oc.l_e, p.r_cut, grad, 2, 3, 5, 1.5, 2.5};
  const Oracle o2{p.lambda2, p.sigma2, p.beta, oc.c_e, oc.c_upper, oc.c_lower, oc.l_e, p.r_cut, grad, 2, 3, 5, 1.5, 2.5};
  const double kappa = std::min(o1.rate(4), o2.rate(4)) / 8.0;
  REQUIRE(kappa > 0.0);
  const double eps = 1e-12;
  for (int q : {1, 2, 4}) {
    CHECK(rep.c_rate_1.at(q) == doctest::Approx(o1.rate(q)).epsilon(eps));
    CHECK(rep.c_rate_2.at(q) == doctest::Approx(o2.rate(q)).epsilon(eps));
  }
  CHECK(rep.kappa == doctest::Approx(kappa).epsilon(eps));
  CHECK(rep.zeta == rep.kappa / 2.0);
  for (int q : {2, 4}) {
    CHECK(rep.c_tail_1.at(q) == doctest::Approx(o1.tail(q, kappa)).epsilon(eps));
    CHECK(rep.c_tail_2.at(q) == doctest::Approx(o2.tail(q, kappa)).epsilon(eps));
    CHECK(rep.c_bar_tail_1.at(q) == doctest::Approx(o1.bar_tail(q, kappa)).epsilon(eps));
    CHECK(rep.c_bar_tail_2.at(q) == doctest::Approx(o2.bar_tail(q, kappa)).epsilon(eps));
  }

  const double lb = 3.0, sb = 0.12, g = 0.1, R = 1.0, R2 = 1.0;
  const double amp = 1.0 + std::exp(2 * g * oc.c_e * (1 + 2 * R2));
  const double decay = 2 * lb + 72 * (lb + 6 * sb * sb) * g * g * std::exp(8 * g * oc.c_e * (1 + R2)) * (1 + R2) +
                       6 * sb * sb * (1 + R2) * amp * grad * grad;
  CHECK(rep.c_decay == doctest::Approx(decay).epsilon(eps));
  const double t1 = o1.tail(4, kappa), t2 = o2.tail(4, kappa);
  const double b1 = o1.bar_tail(4, kappa), b2 = o2.bar_tail(4, kappa);
  const double error =
      (2 * lb + 6 * sb * sb) * 2.0 * std::exp(2 * g * (oc.c_upper + oc.c_lower) * (1 + R2)) * amp * R2 +
      6 * sb * sb * std::sqrt(std::max(t1, t2)) * std::pow(2 * R, 8) * amp * grad * grad +
      (2 * lb + 6 * sb * sb) * 3.0 * std::exp(4 * g * oc.c_upper * (1 + R2)) * oc.l_e * oc.l_e * std::pow(2 * R, 4) *
          (1 + 4 * R) * (1 + 4 * R) +
      18432 * (lb + 6 * sb * sb) * g * g * std::exp(8 * g * oc.c_e * (1 + R2)) * std::pow(R, 8) *
          std::max(std::sqrt(t1 + b1), std::sqrt(t2 + b2));
  CHECK(rep.c_error == doctest::Approx(error).epsilon(eps));
  CHECK(rep.c_main == doctest::Approx(error / rep.zeta * std::exp(decay / rep.zeta)).epsilon(eps));
  CHECK(rep.c_m_1 == doctest::Approx(3 * 0.1 * std::exp(4 * 0.1 * 0.5 * 2) * 1.3).epsilon(eps));
  CHECK(rep.c_m_2 == doctest::Approx(3 * 0.08 * std::exp(4 * 0.08 * 0.5 * 2) * 1.3).epsilon(eps));
  CHECK(rep.lambda_bar == 3.0);
  CHECK(rep.sigma_bar == 0.12);
  CHECK(rep.gamma == 0.1);
}

TEST_CASE("rate flags follow the sign") {
  SystemParams p;  // default regime: every rate constant is negative
  const auto rep = constants_report(p, {1.0, 2.0, 1.0, 1.0}, 10.0);
  int rate_rows = 0;
  for (const auto& [name, value, flag] : rep.rows()) {
    if (name.rfind("c_rate_", 0) == 0) {
      ++rate_rows;
      CHECK(flag == (value > 0 ? 1 : 0));
      CHECK(flag == 0);
    }
    if (name == "kappa") CHECK(flag == 0);
  }
  CHECK(rate_rows == 6);
  CHECK(std::isnan(rep.c_main));  // zeta <= 0: the bound is void
  CHECK(std::isfinite(rep.c_bar_tail_1.at(4)));
}

TEST_CASE("constants input validation") {
  ConstantsInputs in;
  in.c_mz.erase(8);
  CHECK_THROWS_AS(constants_report(SystemParams{}, {}, 10.0, in), std::invalid_argument);
  CHECK_THROWS_AS(c_tail(1, 0.1, 1, 1, 0, {}, 1, ConstantsInputs{}), std::invalid_argument);
  SystemParams bad;
  bad.lambda1 = NAN;
  CHECK_THROWS_AS(constants_report(bad, {}, 10.0), std::invalid_argument);
}
