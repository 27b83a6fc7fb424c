#ifndef CBM_OBJECTIVES_HPP
#define CBM_OBJECTIVES_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbm/core.hpp"

namespace cbm {

using Vec = std::span<const double>;

/// Cost E(x, y) minimised over x and maximised over y, with bound
/// functions lower(y) <= E(x, y) <= upper(x) and their regularity
/// constants. Evaluation is reentrant.
struct ObjectiveSpec {
  std::string name;
  int d1 = 1;
  int d2 = 1;
  std::function<double(Vec x, Vec y)> eval;
  std::function<double(Vec x)> upper_bound;
  std::function<double(Vec y)> lower_bound;
  ObjectiveConstants constants;
  /// Metadata for qualitative tests only; never read by the dynamics.
  std::optional<std::pair<Point, Point>> known_saddle;
};

/// E = (a/2)|x|^2 - (b/2)|y|^2 + x^T C y with C given row-major (d1 x d2).
/// Bounds are the exact partial extrema
///   upper(x) = (a/2)|x|^2 + |C^T x|^2/(2b),  lower(y) = -(b/2)|y|^2 - |C y|^2/(2a),
/// which hold on all of R^d; constants are closed form.
ObjectiveSpec quadratic_saddle(double a, double b, int d1, int d2, std::vector<double> coupling);
/// Convenience: C = c * I (d x d).
ObjectiveSpec quadratic_saddle(double a, double b, int d, double coupling_diag);

/// E = sum f(x_i) - sum f(y_i) + x.y with f(s) = s^2/2 + wiggle (1 - cos 2 pi s),
/// dim = d1 = d2. Constants are estimated on the r_cut ball.
ObjectiveSpec nonconvex_saddle(double wiggle, int dim, double r_cut, int n_samples = 20000,
                               std::uint64_t seed = 0xC0FFEEULL);

/// Zero objective (test fixture).
ObjectiveSpec zero_objective(int d1, int d2);

/// Largest singular value of a row-major rows x cols matrix.
double spectral_norm(std::span<const double> m, int rows, int cols);

inline constexpr double kConstantSafetyFactor = 1.1;

/// Monte Carlo suprema of the four regularity ratios over the ball,
/// inflated by kConstantSafetyFactor. Throws std::domain_error on a
/// non-finite objective value.
ObjectiveConstants estimate_constants(const ObjectiveSpec& obj, double r_cut, int n_samples, const RngStream& stream);

struct ConditionReport {
  int n_samples = 0;
  // Worst value of lhs - rhs per inequality (<= 0 means satisfied).
  double lipschitz_margin = -1e300;
  double sandwich_margin = -1e300;
  double upper_growth_margin = -1e300;
  double lower_growth_margin = -1e300;
  double gap_lower_margin = -1e300;
  double gap_upper_margin = -1e300;
  int violations = 0;

  double worst_margin() const;
};

/// Checks every regularity inequality at `n_samples` random tuples in the
/// r_cut ball (s in {0, 0.5, 1} for the gap inequalities). Report-only.
ConditionReport check_conditions(const ObjectiveSpec& obj, double r_cut, double tol, int n_samples,
                                 const RngStream& stream);

}  // namespace cbm

#endif  // CBM_OBJECTIVES_HPP
