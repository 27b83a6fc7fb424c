#ifndef CBM_STATISTICS_HPP
#define CBM_STATISTICS_HPP

#include <array>
#include <map>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "cbm/core.hpp"

namespace cbm {

/// Orders q of the recorded generalized variances V_{2q}.
inline constexpr std::array<double, 3> kMomentOrders{1.0, 2.0, 4.0};

using MomentSeries = std::array<std::vector<double>, 3>;

/// Per-record measurements of one trial.
struct TrajectoryStats {
  std::vector<double> times;
  MomentSeries v_x_sys, v_y_sys, v_x_bar, v_y_bar, v_x_ref, v_y_ref;
  std::vector<double> d_x, d_y;
  std::vector<Point> consensus_x, consensus_y;
  std::vector<double> sup_weighted_var_x, sup_weighted_var_y;
  /// Largest particle norm seen at any record, over all ensembles.
  double max_norm = 0.0;
  /// Rows found outside the ball after a step (projection off only).
  long long outside_ball = 0;

  std::size_t size() const { return times.size(); }
  /// Flat named columns in CSV order (excluding the trial column).
  std::vector<std::pair<std::string, std::vector<double>>> columns() const;
};

/// (1/n) sum |x_i - mean|^{2q}
double generalized_variance(const Ensemble& e, double q);
/// (1/n) sum |a_i - b_i|^2; throws std::invalid_argument on size mismatch.
double coupling_distance(const Ensemble& a, const Ensemble& b);

inline constexpr int kMaxAssignmentSize = 256;

/// min over permutations of (1/n) sum |a_i - b_pi(i)|^2, by the O(n^3)
/// shortest-augmenting-path assignment method. n <= kMaxAssignmentSize.
double exact_w2_squared(const Ensemble& a, const Ensemble& b);
/// Assignment solver on a row-major n x n cost matrix; returns col for each row.
std::vector<int> solve_assignment(const std::vector<double>& cost, int n);

/// Empirical-measure rate: n^{-1/2} (d < 4), n^{-1/2} log n (d = 4), n^{-2/d} (d > 4).
double delta_d(double n, int d);

/// max_k exp(kappa t_k) values_k
double sup_weighted_process(const std::vector<double>& times, const std::vector<double>& values, double kappa);

struct TailEstimate {
  double p_hat = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  int hits = 0;
  int trials = 0;
};

/// Fraction of sups >= threshold with a Wilson 95% interval.
TailEstimate empirical_tail(const std::vector<double>& sups, double threshold);
std::pair<double, double> wilson_interval(int hits, int trials, double z = 1.959963984540054);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  int dropped = 0;
};

/// Least squares of log(values) on times; slope reported as decay rate = -slope.
/// Non-positive values are dropped (counted); throws std::invalid_argument if
/// fewer than 3 points survive.
struct RateFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  int dropped = 0;
};
RateFit fit_exponential_rate(const std::vector<double>& times, const std::vector<double>& values);

/// Least squares of log(errors) on log(ns).
LinearFit fit_scaling_slope(const std::vector<double>& ns, const std::vector<double>& errors);

/// Ordinary least squares y = slope x + intercept.
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct ConstantsInputs {
  std::map<int, double> c_mz{{2, 1.0}, {4, 1.0}, {8, 1.0}};
  std::map<int, double> c_bdg{{2, 1.0}, {4, 1.0}};
};

/// Every explicit constant of the uniform-in-time bound, evaluated
/// verbatim from the parameters and objective constants.
struct ConstantsReport {
  std::map<int, double> c_rate_1, c_rate_2;  // q in {1, 2, 4}
  double kappa = 0.0;
  double zeta = 0.0;
  std::map<int, double> c_tail_1, c_tail_2;          // q in {2, 4}
  std::map<int, double> c_bar_tail_1, c_bar_tail_2;  // q in {2, 4}
  double c_decay = 0.0;
  double c_error = 0.0;
  double c_main = 0.0;
  double c_m_1 = 0.0;  // consensus stability constant, min player
  double c_m_2 = 0.0;  // max player
  double lambda_bar = 0.0, sigma_bar = 0.0, gamma = 0.0;
  ConstantsInputs inputs;
  ObjectiveConstants objective;
  SystemParams params;
  double grad_sup = 0.0;

  /// (name, value, flag) rows; flag is 1/0 for rate constants (positive or
  /// not) and -1 where no condition applies.
  std::vector<std::tuple<std::string, double, int>> rows() const;
};

/// Tail constant C_tail,i(q) (q >= 2, 0^0 = 1 at q = 2).
double c_tail(int q, double sigma, double weight, double c_rate_q, double kappa, const ObjectiveConstants& c,
              double r_cut, const ConstantsInputs& in);
/// Copy tail constant, given C_tail,i(q).
double c_bar_tail(int q, double sigma, double weight, double c_rate_1, double c_rate_q, double kappa,
                  double c_tail_q, const ObjectiveConstants& c, double r_cut, const ConstantsInputs& in);
/// 2q (lambda - (2q - 1) sigma^2 (1 + exp(2 w C_E (1 + 2 R^2))))
double c_rate(double q, double lambda, double sigma, double weight, double c_e, double r_cut);

ConstantsReport constants_report(const SystemParams& p, const ObjectiveConstants& c, double grad_sup,
                                 const ConstantsInputs& in = {});

}  // namespace cbm

#endif  // CBM_STATISTICS_HPP
