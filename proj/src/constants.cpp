#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cbm/consensus.hpp"
#include "cbm/statistics.hpp"

namespace cbm {

namespace {

// a * b with 0 * inf = 0: a vanishing prefactor (sigma = 0, gamma = 0)
// removes the whole term.
double times(double a, double b) { return a == 0.0 ? 0.0 : a * b; }

double lookup(const std::map<int, double>& m, int key, const char* what) {
  const auto it = m.find(key);
  if (it == m.end()) throw std::invalid_argument(std::string("constants_report: missing ") + what + " for p = " + std::to_string(key));
  return it->second;
}

// 1 + exp(2 w C_E (1 + 2 R^2))
double amplification(double weight, double c_e, double r_cut) {
  return 1.0 + std::exp(2.0 * weight * c_e * (1.0 + 2.0 * r_cut * r_cut));
}

// log(1 + e^x) without overflow.
double log1p_exp(double x) { return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double c_rate(double q, double lambda, double sigma, double weight, double c_e, double r_cut) {
  return 2.0 * q * (lambda - (2.0 * q - 1.0) * times(sigma * sigma, amplification(weight, c_e, r_cut)));
}

double c_tail(int q, double sigma, double weight, double c_rate_q, double kappa, const ObjectiveConstants& c,
              double r_cut, const ConstantsInputs& in) {
  if (q < 2) throw std::invalid_argument("c_tail: q must be >= 2");
  const double eight_q = std::pow(2.0, 3.0 * q);
  const double mz = lookup(in.c_mz, 2 * q, "C_MZ");
  const double bdg = lookup(in.c_bdg, q, "C_BDG");
  // (q - 2)^{-(q - 2)/2} with 0^0 = 1.
  const double degenerate = q == 2 ? 1.0 : std::pow(q - 2.0, -(q - 2.0) / 2.0);
  const double noise = times(std::pow(sigma, q), bdg * std::pow(c_rate_q - q * kappa, -q / 2.0) * degenerate *
                                                     std::sqrt(amplification(weight, c.c_e, r_cut)));
  return eight_q * mz + eight_q * noise;
}

double c_bar_tail(int q, double sigma, double weight, double c_rate_1, double c_rate_q, double kappa,
                  double c_tail_q, const ObjectiveConstants& c, double r_cut, const ConstantsInputs& in) {
  const double mz = lookup(in.c_mz, 2 * q, "C_MZ");
  const double first = std::pow(1.5, q) * c_tail_q;
  if (sigma == 0.0) return first;
  const double r2 = r_cut * r_cut;
  // The second term multiplies factors such as e^{q x} and (C_rate - q kappa)^{-q}
  // that overflow separately; sum their logarithms instead. q is even, so
  // both q-th powers are nonnegative.
  const double log_half_amp = log1p_exp(weight * c.c_e * (1.0 + 2.0 * r2));
  const double log_amp = log1p_exp(2.0 * weight * c.c_e * (1.0 + 2.0 * r2));
  const double ratio = std::exp(2.0 * std::log(sigma) + 2.0 * log_half_amp) / (c_rate_1 - kappa);
  const double log_lead = q * std::log(std::abs(1.0 + ratio));
  const double log_body = (3.0 * q - 1.0) * std::log(2.0) + 2.0 * q * std::log(sigma) + q * std::log(q - 1.0) -
                          q * std::log(std::abs(c_rate_q - q * kappa)) + std::log(mz) +
                          2.0 * q * weight * (c.c_upper + c.c_lower) * (1.0 + r2) + q * log_amp;
  if (q % 2 != 0) throw std::invalid_argument("c_bar_tail: q must be even");
  return first + std::exp(log_lead + log_body);
}

ConstantsReport constants_report(const SystemParams& p, const ObjectiveConstants& c, double grad_sup,
                                 const ConstantsInputs& in) {
  for (double v : {p.lambda1, p.lambda2, p.sigma1, p.sigma2, p.alpha, p.beta, p.r_cut, c.l_e, c.c_e, c.c_upper,
                   c.c_lower, grad_sup})
    if (!std::isfinite(v)) throw std::invalid_argument("constants_report: non-finite input");

  ConstantsReport r;
  r.inputs = in;
  r.objective = c;
  r.params = p;
  r.grad_sup = grad_sup;
  const double R = p.r_cut;
  const double R2 = R * R;

  for (int q : {1, 2, 4}) {
    r.c_rate_1[q] = c_rate(q, p.lambda1, p.sigma1, p.alpha, c.c_e, R);
    r.c_rate_2[q] = c_rate(q, p.lambda2, p.sigma2, p.beta, c.c_e, R);
  }
  r.kappa = std::min(r.c_rate_1[4], r.c_rate_2[4]) / 8.0;
  r.zeta = r.kappa / 2.0;

  for (int q : {2, 4}) {
    r.c_tail_1[q] = c_tail(q, p.sigma1, p.alpha, r.c_rate_1[q], r.kappa, c, R, in);
    r.c_tail_2[q] = c_tail(q, p.sigma2, p.beta, r.c_rate_2[q], r.kappa, c, R, in);
    r.c_bar_tail_1[q] = c_bar_tail(q, p.sigma1, p.alpha, r.c_rate_1[1], r.c_rate_1[q], r.kappa, r.c_tail_1[q], c, R, in);
    r.c_bar_tail_2[q] = c_bar_tail(q, p.sigma2, p.beta, r.c_rate_2[1], r.c_rate_2[q], r.kappa, r.c_tail_2[q], c, R, in);
  }

  const double lb = std::max(p.lambda1, p.lambda2);
  const double sb = std::max(p.sigma1, p.sigma2);
  const double g = std::max(p.alpha, p.beta);
  r.lambda_bar = lb;
  r.sigma_bar = sb;
  r.gamma = g;
  const double s2 = sb * sb;
  const double amp = amplification(g, c.c_e, R);
  const double g2 = grad_sup * grad_sup;

  r.c_decay = 2.0 * lb + times(72.0 * (lb + 6.0 * s2) * g * g, std::exp(8.0 * g * c.c_e * (1.0 + R2)) * (1.0 + R2)) +
              times(6.0 * s2, (1.0 + R2) * amp * g2);

  const double mz2 = lookup(in.c_mz, 2, "C_MZ");
  const double mz4 = lookup(in.c_mz, 4, "C_MZ");
  const double tail_max = std::max(r.c_tail_1[4], r.c_tail_2[4]);
  const double tail_sum_max =
      std::max(std::sqrt(r.c_tail_1[4] + r.c_bar_tail_1[4]), std::sqrt(r.c_tail_2[4] + r.c_bar_tail_2[4]));
  r.c_error = (2.0 * lb + 6.0 * s2) * mz2 * std::exp(2.0 * g * (c.c_upper + c.c_lower) * (1.0 + R2)) * amp * R2 +
              times(6.0 * s2, std::sqrt(tail_max) * std::pow(2.0 * R, 8) * amp * g2) +
              (2.0 * lb + 6.0 * s2) * mz4 * std::exp(4.0 * g * c.c_upper * (1.0 + R2)) * c.l_e * c.l_e *
                  std::pow(2.0 * R, 4) * (1.0 + 4.0 * R) * (1.0 + 4.0 * R) +
              times(18432.0 * (lb + 6.0 * s2) * g * g, std::exp(8.0 * g * c.c_e * (1.0 + R2)) * std::pow(R, 8) * tail_sum_max);

  r.c_main = r.zeta > 0.0 ? r.c_error / r.zeta * std::exp(r.c_decay / r.zeta) : std::numeric_limits<double>::quiet_NaN();
  r.c_m_1 = stability_constant(p.alpha, c, R);
  r.c_m_2 = stability_constant(p.beta, c, R);
  return r;
}

std::vector<std::tuple<std::string, double, int>> ConstantsReport::rows() const {
  std::vector<std::tuple<std::string, double, int>> out;
  auto flag = [](double v) { return v > 0.0 ? 1 : 0; };
  for (const auto& [q, v] : c_rate_1) out.emplace_back("c_rate_1(" + std::to_string(q) + ")", v, flag(v));
  for (const auto& [q, v] : c_rate_2) out.emplace_back("c_rate_2(" + std::to_string(q) + ")", v, flag(v));
  out.emplace_back("kappa", kappa, flag(kappa));
  out.emplace_back("zeta", zeta, flag(zeta));
  for (const auto& [q, v] : c_tail_1) out.emplace_back("c_tail_1(" + std::to_string(q) + ")", v, -1);
  for (const auto& [q, v] : c_tail_2) out.emplace_back("c_tail_2(" + std::to_string(q) + ")", v, -1);
  for (const auto& [q, v] : c_bar_tail_1) out.emplace_back("c_bar_tail_1(" + std::to_string(q) + ")", v, -1);
  for (const auto& [q, v] : c_bar_tail_2) out.emplace_back("c_bar_tail_2(" + std::to_string(q) + ")", v, -1);
  out.emplace_back("c_decay", c_decay, -1);
  out.emplace_back("c_error", c_error, -1);
  out.emplace_back("c_main", c_main, -1);
  out.emplace_back("c_m_1", c_m_1, -1);
  out.emplace_back("c_m_2", c_m_2, -1);
  out.emplace_back("lambda_bar", lambda_bar, -1);
  out.emplace_back("sigma_bar", sigma_bar, -1);
  out.emplace_back("gamma", gamma, -1);
  for (const auto& [k, v] : inputs.c_mz) out.emplace_back("c_mz_" + std::to_string(k), v, -1);
  for (const auto& [k, v] : inputs.c_bdg) out.emplace_back("c_bdg_" + std::to_string(k), v, -1);
  out.emplace_back("l_e", objective.l_e, -1);
  out.emplace_back("c_e", objective.c_e, -1);
  out.emplace_back("c_upper", objective.c_upper, -1);
  out.emplace_back("c_lower", objective.c_lower, -1);
  out.emplace_back("grad_sup", grad_sup, -1);
  const std::pair<const char*, double> echoed[] = {
      {"lambda1", params.lambda1}, {"lambda2", params.lambda2}, {"sigma1", params.sigma1},
      {"sigma2", params.sigma2},   {"alpha", params.alpha},     {"beta", params.beta},
      {"r_cut", params.r_cut}};
  for (const auto& [name, v] : echoed) out.emplace_back(name, v, -1);
  return out;
}

}  // namespace cbm
