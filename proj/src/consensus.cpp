#include "cbm/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cbm/kernels.hpp"

namespace cbm {

namespace {

// exponent_i = -w E(x_i, other) for Min, +w E(other, y_i) for Max.
std::vector<double> exponents(Side side, const Ensemble& ens, Vec other_mean, const ObjectiveSpec& obj,
                              double weight) {
  std::vector<double> ex(static_cast<std::size_t>(ens.n));
  if (side == Side::Min) {
    kernels::omp::row_map(ens, [&](Vec x) { return -weight * obj.eval(x, other_mean); }, ex);
  } else {
    kernels::omp::row_map(ens, [&](Vec y) { return weight * obj.eval(other_mean, y); }, ex);
  }
  for (double v : ex)
    if (std::isnan(v) || std::isinf(v)) {
      // w = 0 times a finite value is 0; anything else is a bad objective value.
      throw std::domain_error("consensus: objective evaluated to a non-finite value");
    }
  return ex;
}

void require_nonempty(const Ensemble& e) {
  if (e.n < 1) throw std::invalid_argument("consensus: empty ensemble");
}

}  // namespace

Point mean(const Ensemble& e) {
  require_nonempty(e);
  Point m(static_cast<std::size_t>(e.dim));
  kernels::omp::mean(e, m);
  return m;
}

ConsensusPoint consensus(Side side, const Ensemble& ens, Vec other_mean, const ObjectiveSpec& obj, double weight) {
  require_nonempty(ens);
  if (!(weight >= 0)) throw std::invalid_argument("consensus: weight must be >= 0");
  const auto ex = exponents(side, ens, other_mean, obj, weight);
  const double shift = *std::max_element(ex.begin(), ex.end());
  ConsensusPoint c;
  c.point.resize(static_cast<std::size_t>(ens.dim));
  const double z = kernels::omp::weighted_average(ens, ex, shift, c.point);
  c.max_exponent_shift = shift;
  c.log_normalizer = shift + std::log(z / ens.n);
  return c;
}

ConsensusPoint consensus_min(const Ensemble& x_ens, Vec y_mean, const ObjectiveSpec& obj, double alpha) {
  return consensus(Side::Min, x_ens, y_mean, obj, alpha);
}

ConsensusPoint consensus_max(const Ensemble& y_ens, Vec x_mean, const ObjectiveSpec& obj, double beta) {
  return consensus(Side::Max, y_ens, x_mean, obj, beta);
}

ConsensusPoint consensus_naive(Side side, const Ensemble& ens, Vec other_mean, const ObjectiveSpec& obj,
                               double weight) {
  require_nonempty(ens);
  const auto ex = exponents(side, ens, other_mean, obj, weight);
  ConsensusPoint c;
  c.point.assign(static_cast<std::size_t>(ens.dim), 0.0);
  double z = 0.0;
  for (int i = 0; i < ens.n; ++i) {
    const double w = std::exp(ex[i]);
    if (!std::isfinite(w)) throw std::overflow_error("consensus_naive: weight overflow");
    z += w;
    const auto r = ens.row(i);
    for (int k = 0; k < ens.dim; ++k) c.point[k] += w * r[k];
  }
  if (!(z > 0.0) || !std::isfinite(z)) throw std::overflow_error("consensus_naive: normaliser out of range");
  for (double& v : c.point) v /= z;
  c.log_normalizer = std::log(z / ens.n);
  return c;
}

GapCheck check_mean_consensus_gap(Side side, const Ensemble& ens, Vec other_mean, const ObjectiveSpec& obj,
                                  double weight, double p, double c_e, double r_cut) {
  const Point m = mean(ens);
  const ConsensusPoint cp = consensus(side, ens, other_mean, obj, weight);
  double d2 = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) d2 += (m[k] - cp.point[k]) * (m[k] - cp.point[k]);
  GapCheck g;
  g.lhs = std::pow(d2, p / 2.0);
  const double vp = kernels::omp::central_moment(ens, m, p / 2.0);
  g.rhs = vp == 0.0 ? 0.0 : std::exp(2.0 * weight * c_e * (1.0 + 2.0 * r_cut * r_cut)) * vp;
  g.holds = g.lhs <= g.rhs * (1.0 + 1e-12);
  return g;
}

double stability_constant(double weight, const ObjectiveConstants& c, double r_cut) {
  return 3.0 * weight * std::exp(4.0 * weight * c.c_e * (1.0 + r_cut * r_cut)) * c.l_e;
}

StabilityCheck check_consensus_stability(Side side, const Ensemble& mu1, const Ensemble& mu1_bar, Vec mu2_mean,
                                         Vec mu2_bar_mean, const ObjectiveSpec& obj, double weight,
                                         const ObjectiveConstants& constants, double r_cut) {
  if (mu1.n != mu1_bar.n || mu1.dim != mu1_bar.dim)
    throw std::invalid_argument("check_consensus_stability: ensembles must be index-coupled (equal sizes)");
  const Point m = mean(mu1);
  const Point mb = mean(mu1_bar);
  const Point c = consensus(side, mu1, mu2_mean, obj, weight).point;
  const Point cb = consensus(side, mu1_bar, mu2_bar_mean, obj, weight).point;
  double lhs2 = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double v = (c[k] - m[k]) - (cb[k] - mb[k]);
    lhs2 += v * v;
  }
  double mean_gap2 = 0.0;
  for (std::size_t k = 0; k < mu2_mean.size(); ++k)
    mean_gap2 += (mu2_mean[k] - mu2_bar_mean[k]) * (mu2_mean[k] - mu2_bar_mean[k]);

  StabilityCheck s;
  s.c_m = stability_constant(weight, constants, r_cut);
  s.lhs = std::sqrt(lhs2);
  const double spread = std::sqrt(kernels::omp::central_moment(mu1, m, 1.0)) +
                        std::sqrt(kernels::omp::central_moment(mu1_bar, mb, 1.0));
  const double w2_index = std::sqrt(kernels::omp::coupling_distance(mu1, mu1_bar));
  const double factor = spread * (w2_index + std::sqrt(mean_gap2));
  s.rhs = factor == 0.0 ? 0.0 : s.c_m * factor;
  s.holds = s.lhs <= s.rhs * (1.0 + 1e-12);
  return s;
}

}  // namespace cbm
