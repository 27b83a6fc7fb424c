#include "cbm/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cbm {

std::int64_t SystemParams::num_steps() const {
  return static_cast<std::int64_t>(std::llround(t_end / dt));
}

Ensemble::Ensemble(int n_rows, int d, std::vector<double> pos) : dim(d), n(n_rows), positions(std::move(pos)) {
  if (positions.size() != static_cast<std::size_t>(n_rows) * d)
    throw std::invalid_argument("Ensemble: positions size does not match n * dim");
}

double norm(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return std::sqrt(s);
}

double max_row_norm(const Ensemble& e) {
  double m = 0.0;
  for (int i = 0; i < e.n; ++i) m = std::max(m, norm(e.row(i)));
  return m;
}

CutoffSpec CutoffSpec::make(double r_cut, double plateau_ratio) {
  if (!(r_cut > 0.0) || !std::isfinite(r_cut)) throw ParamError("cutoff.r_cut", "must be finite and > 0");
  if (!(plateau_ratio > 0.0 && plateau_ratio < 1.0))
    throw ParamError("cutoff.plateau_ratio", "must lie in (0, 1)");
  CutoffSpec s;
  s.r_cut = r_cut;
  s.r_plateau = plateau_ratio * r_cut;
  // |d/dt sigmoid(1/t - 1/(1-t))| peaks at t = 1/2 with value 2.
  s.grad_sup = 2.0 / (s.r_cut - s.r_plateau);
  return s;
}

double phi_radial(const CutoffSpec& spec, double r) {
  if (r <= spec.r_plateau) return 1.0;
  if (r >= spec.r_cut) return 0.0;
  const double t = (r - spec.r_plateau) / (spec.r_cut - spec.r_plateau);
  // exp(-1/(1-t)) / (exp(-1/(1-t)) + exp(-1/t)), written as a logistic.
  const double e = 1.0 / (1.0 - t) - 1.0 / t;
  return 1.0 / (1.0 + std::exp(e));
}

double phi(const CutoffSpec& spec, std::span<const double> z) { return phi_radial(spec, norm(z)); }

void sample_point(const InitialSpec& spec, double r_cut, const RngStream& at, std::span<double> out) {
  const auto dim = static_cast<std::uint32_t>(out.size());
  if (spec.kind == InitialKind::UniformBall) {
    // Direction from d normals, radius r_cut * U^(1/d); the uniform sits
    // after the normals in the coordinate's block sequence.
    at.normals(out);
    const double len = norm(out);
    const std::uint32_t u_index = 2 * ((dim + 1) / 2);
    const double radius = r_cut * std::pow(at.uniform(u_index), 1.0 / dim);
    if (len == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    for (double& v : out) v *= radius / len;
    return;
  }
  const double scale = spec.gaussian_scale > 0.0 ? spec.gaussian_scale : r_cut / 3.0;
  // Each attempt consumes an even-aligned run of normals.
  const std::uint32_t stride = 2 * ((dim + 1) / 2);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    at.normals(out, static_cast<std::uint32_t>(attempt) * stride);
    for (double& v : out) v *= scale;
    if (norm(out) <= r_cut) return;
  }
  throw std::runtime_error("sample_initial: truncated gaussian exceeded retry cap; scale too large for r_cut");
}

Ensemble sample_initial(const InitialSpec& spec, int n, int dim, double r_cut, const RngStream& stream,
                        std::uint32_t trial, Species species) {
  if (n < 1 || dim < 1) throw std::invalid_argument("sample_initial: n and dim must be >= 1");
  Ensemble e(n, dim);
  for (int i = 0; i < n; ++i)
    sample_point(spec, r_cut, stream.at(trial, species, static_cast<std::uint32_t>(i), kInitStep), e.row(i));
  return e;
}

double initial_moment(const InitialSpec& spec, int dim, double r_cut, double q) {
  if (spec.kind == InitialKind::UniformBall) {
    // E|X|^{2q} for X uniform in the d-ball: d/(d+2q) R^{2q}.
    return dim / (dim + 2.0 * q) * std::pow(r_cut, 2.0 * q);
  }
  // The truncated law is centred, so the central moment is E|X|^{2q}.
  constexpr int kSamples = 200000;
  const RngStream stream(0x5eed'0f'1417ULL);
  std::vector<double> z(static_cast<std::size_t>(dim));
  double acc = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    sample_point(spec, r_cut, stream.at(0, Species::Aux, static_cast<std::uint32_t>(i), kInitStep), z);
    acc += std::pow(norm(z), 2.0 * q);
  }
  return acc / kSamples;
}

const Condition* ValidationReport::find(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ParamError(field, what);
}

// sigma^2 * factor with 0 * inf treated as 0 (sigma = 0 disables noise).
double noise_term(double sigma, double factor) { return sigma == 0.0 ? 0.0 : sigma * sigma * factor; }

}  // namespace

ValidationReport validate_params(const SystemParams& p, const ObjectiveConstants& c, const CutoffSpec& cutoff) {
  auto finite = [](double v) { return std::isfinite(v); };
  require(finite(p.lambda1) && p.lambda1 > 0, "params.lambda1", "must be finite and > 0");
  require(finite(p.lambda2) && p.lambda2 > 0, "params.lambda2", "must be finite and > 0");
  require(finite(p.sigma1) && p.sigma1 >= 0, "params.sigma1", "must be finite and >= 0");
  require(finite(p.sigma2) && p.sigma2 >= 0, "params.sigma2", "must be finite and >= 0");
  require(finite(p.alpha) && p.alpha >= 0, "params.alpha", "must be finite and >= 0");
  require(finite(p.beta) && p.beta >= 0, "params.beta", "must be finite and >= 0");
  require(finite(p.r_cut) && p.r_cut > 0, "params.r_cut", "must be finite and > 0");
  require(p.d1 >= 1, "params.d1", "must be >= 1");
  require(p.d2 >= 1, "params.d2", "must be >= 1");
  require(p.n1 >= 1, "params.n1", "must be >= 1");
  require(p.n2 >= 1, "params.n2", "must be >= 1");
  require(p.n_ref >= std::max(p.n1, p.n2), "params.n_ref", "must be >= max(n1, n2)");
  require(finite(p.dt) && p.dt > 0, "params.dt", "must be finite and > 0");
  require(finite(p.t_end) && p.t_end >= 0, "params.t_end", "must be finite and >= 0");
  require(p.record_stride >= 1, "params.record_stride", "must be >= 1");
  require(finite(c.l_e) && c.l_e >= 0, "objective.l_e", "must be finite and >= 0");
  require(finite(c.c_e) && c.c_e >= 0, "objective.c_e", "must be finite and >= 0");
  require(finite(c.c_upper) && c.c_upper >= 0, "objective.c_upper", "must be finite and >= 0");
  require(finite(c.c_lower) && c.c_lower >= 0, "objective.c_lower", "must be finite and >= 0");

  ValidationReport rep;
  const double r2 = p.r_cut * p.r_cut;
  struct Player {
    const char* tag;
    double lambda, sigma, weight;
  };
  const Player players[] = {{"x", p.lambda1, p.sigma1, p.alpha}, {"y", p.lambda2, p.sigma2, p.beta}};

  for (const auto& pl : players) {
    const double amp = 1.0 + std::exp(2.0 * pl.weight * c.c_e * (1.0 + 2.0 * r2));
    for (int q : {1, 2, 4}) {
      const double rhs = (2.0 * q - 1.0) * noise_term(pl.sigma, amp);
      rep.conditions.push_back({std::string("variance_decay_") + pl.tag + "_q" + std::to_string(q), pl.lambda, rhs,
                                pl.lambda > rhs});
    }
    const double grad_branch = 3.0 * noise_term(pl.sigma, 1.0 + 4.0 * r2 * cutoff.grad_sup * cutoff.grad_sup);
    // As printed for the uniform-in-time bound: exponent 2*w*(1+R^2), no C_E.
    const double printed = std::max(15.0 * noise_term(pl.sigma, 1.0 + std::exp(2.0 * pl.weight * (1.0 + r2))),
                                    grad_branch);
    rep.conditions.push_back({std::string("uniform_poc_printed_") + pl.tag, pl.lambda, printed, pl.lambda > printed});
    // The same bound with the gap-constant exponent used by the variance estimates.
    const double with_ce = std::max(15.0 * noise_term(pl.sigma, amp), grad_branch);
    rep.conditions.push_back({std::string("uniform_poc_with_ce_") + pl.tag, pl.lambda, with_ce, pl.lambda > with_ce});
  }

  const double dt_max = 1.0 / (2.0 * std::max(p.lambda1, p.lambda2));
  rep.conditions.push_back({"euler_stability", p.dt, dt_max, p.dt < dt_max});

  for (const auto& cond : rep.conditions) {
    if (!cond.holds) {
      std::ostringstream os;
      os << "condition " << cond.name << " not satisfied (" << cond.lhs << " vs " << cond.rhs << ")";
      rep.warnings.push_back(os.str());
    }
  }
  return rep;
}

}  // namespace cbm
