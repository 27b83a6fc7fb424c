#ifndef CBM_CORE_HPP
#define CBM_CORE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbm/rng.hpp"

namespace cbm {

using Point = std::vector<double>;

/// Invalid parameter or configuration value. `field()` names the offending key.
class ParamError : public std::invalid_argument {
 public:
  ParamError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Scalars of the coupled min/max particle system.
struct SystemParams {
  double lambda1 = 3.0;
  double lambda2 = 3.0;
  double sigma1 = 0.2;
  double sigma2 = 0.2;
  double alpha = 5.0;
  double beta = 5.0;
  double r_cut = 2.0;
  int d1 = 2;
  int d2 = 2;
  int n1 = 64;
  int n2 = 64;
  int n_ref = 1024;
  double dt = 1e-2;
  double t_end = 10.0;
  int record_stride = 10;
  std::uint64_t seed = 1;
  bool project_to_ball = true;

  /// Number of Euler steps to reach t_end.
  std::int64_t num_steps() const;
};

/// Regularity constants of the objective (all >= 0):
/// Lipschitz `l_e`, gap `c_e`, growth of the upper bound `c_upper` and of
/// the lower bound `c_lower`.
struct ObjectiveConstants {
  double l_e = 0.0;
  double c_e = 0.0;
  double c_upper = 0.0;
  double c_lower = 0.0;
};

/// N x dim particle positions, row-major.
struct Ensemble {
  int dim = 1;
  int n = 0;
  std::vector<double> positions;

  Ensemble() = default;
  Ensemble(int n_rows, int d) : dim(d), n(n_rows), positions(static_cast<std::size_t>(n_rows) * d, 0.0) {}
  Ensemble(int n_rows, int d, std::vector<double> pos);

  std::span<double> row(int i) { return {positions.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)}; }
  std::span<const double> row(int i) const {
    return {positions.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  bool empty() const { return n == 0; }
  bool operator==(const Ensemble&) const = default;
};

double norm(std::span<const double> z);
/// Largest row norm.
double max_row_norm(const Ensemble& e);

/// Smooth compactly supported cutoff: 1 on |z| <= r_plateau, 0 on
/// |z| >= r_cut, exponential-bump transition in between.
struct CutoffSpec {
  double r_cut = 2.0;
  double r_plateau = 1.8;
  double grad_sup = 10.0;

  static CutoffSpec make(double r_cut, double plateau_ratio = 0.9);
};

double phi(const CutoffSpec& spec, std::span<const double> z);
/// phi as a function of the radius |z|.
double phi_radial(const CutoffSpec& spec, double r);

enum class InitialKind { UniformBall, TruncatedGaussian };

struct InitialSpec {
  InitialKind kind = InitialKind::UniformBall;
  /// Per-component standard deviation for TruncatedGaussian; <= 0 means r_cut / 3.
  double gaussian_scale = 0.0;
};

inline constexpr int kMaxRejections = 1000;

/// Samples row i from stream.at(trial, species, labels[i] or i, kInitStep).
/// Throws std::runtime_error when the truncated gaussian exhausts its retries.
Ensemble sample_initial(const InitialSpec& spec, int n, int dim, double r_cut, const RngStream& stream,
                        std::uint32_t trial, Species species);

/// One row drawn at the given (already positioned) stream coordinate.
void sample_point(const InitialSpec& spec, double r_cut, const RngStream& at, std::span<double> out);

/// Var and 2q-th central moment of the initial law, about its mean (zero).
/// Closed form for the uniform ball; deterministic quadrature-by-sampling
/// for the truncated gaussian.
double initial_moment(const InitialSpec& spec, int dim, double r_cut, double q);

struct Condition {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct ValidationReport {
  std::vector<Condition> conditions;
  std::vector<std::string> warnings;

  const Condition* find(const std::string& name) const;
};

/// Throws ParamError on non-finite or sign-violating fields; all rate and
/// stability conditions are reported, never enforced.
ValidationReport validate_params(const SystemParams& p, const ObjectiveConstants& c, const CutoffSpec& cutoff);

}  // namespace cbm

#endif  // CBM_CORE_HPP
