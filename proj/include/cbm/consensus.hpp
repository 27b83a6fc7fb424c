#ifndef CBM_CONSENSUS_HPP
#define CBM_CONSENSUS_HPP

#include "cbm/core.hpp"
#include "cbm/objectives.hpp"

namespace cbm {

/// Which player an ensemble belongs to: Min weights particles by
/// exp(-alpha E(x, mean_y)), Max by exp(+beta E(mean_x, y)).
enum class Side { Min, Max };

struct ConsensusPoint {
  Point point;
  /// log of (1/n) sum_i exp(exponent_i)
  double log_normalizer = 0.0;
  /// max_i exponent_i, subtracted before exponentiating
  double max_exponent_shift = 0.0;
};

Point mean(const Ensemble& e);

/// Weighted average sum_i w_i x_i with w_i proportional to
/// exp(-alpha E(x_i, y_mean)), evaluated in the log domain.
/// Throws std::domain_error on a non-finite objective value.
ConsensusPoint consensus_min(const Ensemble& x_ens, Vec y_mean, const ObjectiveSpec& obj, double alpha);
/// Mirror for the ascent player: weights exp(+beta E(x_mean, y_i)).
ConsensusPoint consensus_max(const Ensemble& y_ens, Vec x_mean, const ObjectiveSpec& obj, double beta);
ConsensusPoint consensus(Side side, const Ensemble& ens, Vec other_mean, const ObjectiveSpec& obj, double weight);

/// Test oracle: the same average with plain exponentials and no shift.
/// Throws std::overflow_error when a weight overflows or the normaliser
/// underflows to zero.
ConsensusPoint consensus_naive(Side side, const Ensemble& ens, Vec other_mean, const ObjectiveSpec& obj,
                               double weight);

/// |M(mu1) - consensus(mu1, mu2)|^p  vs  exp(2 w C_E (1 + 2 R^2)) V_p(mu1).
struct GapCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

GapCheck check_mean_consensus_gap(Side side, const Ensemble& ens, Vec other_mean, const ObjectiveSpec& obj,
                                  double weight, double p, double c_e, double r_cut);

/// |(cons - M)(mu1, mu2) - (cons - M)(mu1bar, mu2bar)|  vs
/// C_M (sqrt Var mu1 + sqrt Var mu1bar)(W2(mu1, mu1bar) + |M mu2 - M mu2bar|)
/// with C_M = 3 w exp(4 w C_E (1 + R^2)) L_E. W2 is bounded above by the
/// index coupling of the two equally sized ensembles; the opposing
/// measures enter the operator only through their means.
struct StabilityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double c_m = 0.0;
  bool holds = true;
};

double stability_constant(double weight, const ObjectiveConstants& c, double r_cut);

StabilityCheck check_consensus_stability(Side side, const Ensemble& mu1, const Ensemble& mu1_bar, Vec mu2_mean,
                                         Vec mu2_bar_mean, const ObjectiveSpec& obj, double weight,
                                         const ObjectiveConstants& constants, double r_cut);

}  // namespace cbm

#endif  // CBM_CONSENSUS_HPP
