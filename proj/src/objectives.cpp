#include "cbm/objectives.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace cbm {

namespace {

double dot(Vec a, Vec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sq(Vec a) { return dot(a, a); }

double wiggle_f(double s, double wiggle) {
  return 0.5 * s * s + wiggle * (1.0 - std::cos(2.0 * std::numbers::pi * s));
}

// Point slots drawn per sample tuple.
enum Slot : std::uint32_t { kX = 0, kY, kXp, kYp, kU, kV, kDir1, kDir2, kScalar };

struct TupleSampler {
  const RngStream& stream;
  double r_cut;
  InitialSpec ball{InitialKind::UniformBall, 0.0};

  void point(std::uint32_t sample, Slot slot, std::span<double> out) const {
    sample_point(ball, r_cut, stream.at(0, Species::Aux, sample, slot), out);
  }
  double scalar(std::uint32_t sample, std::uint32_t k) const {
    return stream.at(0, Species::Aux, sample, kScalar).uniform(k);
  }
};

// A nearby partner point: x + h * unit direction, h = 1e-3 r_cut.
void local_partner(const TupleSampler& ts, std::uint32_t sample, Slot dir_slot, Vec base, std::span<double> out) {
  ts.stream.at(0, Species::Aux, sample, dir_slot).normals(out);
  const double len = norm(out);
  const double h = 1e-3 * ts.r_cut;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = base[i] + (len > 0 ? h * out[i] / len : 0.0);
}

struct Tuple {
  std::vector<double> x, y, xp, yp, u, v;
  Tuple(int d1, int d2) : x(d1), y(d2), xp(d1), yp(d2), u(d1), v(d2) {}
};

void draw_tuple(const TupleSampler& ts, std::uint32_t sample, Tuple& t) {
  ts.point(sample, kX, t.x);
  ts.point(sample, kY, t.y);
  ts.point(sample, kU, t.u);
  ts.point(sample, kV, t.v);
  if (sample % 2 == 0) {
    ts.point(sample, kXp, t.xp);
    ts.point(sample, kYp, t.yp);
  } else {
    local_partner(ts, sample, kDir1, t.x, t.xp);
    local_partner(ts, sample, kDir2, t.y, t.yp);
  }
}

std::vector<double> shifted(Vec a, Vec dir, double s) {
  std::vector<double> r(a.begin(), a.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += s * dir[i];
  return r;
}

double checked(double v) {
  if (!std::isfinite(v)) throw std::domain_error("objective evaluated to a non-finite value");
  return v;
}

struct Ratios {
  double lipschitz, upper_growth, lower_growth, gap_lower, gap_upper;
};

Ratios ratios(const ObjectiveSpec& obj, const Tuple& t, double s) {
  const double e = checked(obj.eval(t.x, t.y));
  const double ep = checked(obj.eval(t.xp, t.yp));
  const double dist = norm(shifted(t.x, t.xp, -1.0)) + norm(shifted(t.y, t.yp, -1.0));
  const double weight = 1.0 + norm(t.x) + norm(t.xp) + norm(t.y) + norm(t.yp);
  Ratios r{};
  r.lipschitz = dist > 0 ? std::abs(e - ep) / (weight * dist) : 0.0;
  r.upper_growth = checked(obj.upper_bound(t.x)) / (1.0 + sq(t.x));
  r.lower_growth = -checked(obj.lower_bound(t.y)) / (1.0 + sq(t.y));
  const double lower_shift = checked(obj.lower_bound(shifted(t.y, t.v, s)));
  const double upper_shift = checked(obj.upper_bound(shifted(t.x, t.u, s)));
  r.gap_lower = (e - lower_shift) / (1.0 + sq(t.x) + sq(t.y) + sq(t.v));
  r.gap_upper = (upper_shift - e) / (1.0 + sq(t.x) + sq(t.y) + sq(t.u));
  return r;
}

}  // namespace

double spectral_norm(std::span<const double> m, int rows, int cols) {
  if (m.size() != static_cast<std::size_t>(rows) * cols) throw std::invalid_argument("spectral_norm: size mismatch");
  if (rows == 0 || cols == 0) return 0.0;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mat(m.data(), rows, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  return svd.singularValues()(0);
}

ObjectiveSpec quadratic_saddle(double a, double b, int d1, int d2, std::vector<double> coupling) {
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument("quadratic_saddle: a and b must be > 0");
  if (coupling.size() != static_cast<std::size_t>(d1) * d2)
    throw std::invalid_argument("quadratic_saddle: coupling must be d1 x d2");
  const double s = spectral_norm(coupling, d1, d2);

  auto c = std::make_shared<const std::vector<double>>(std::move(coupling));
  // (C^T x)_j and (C y)_i.
  auto ct_x = [c, d1, d2](Vec x, int j) {
    double v = 0.0;
    for (int i = 0; i < d1; ++i) v += x[i] * (*c)[static_cast<std::size_t>(i) * d2 + j];
    return v;
  };
  auto c_y = [c, d2](Vec y, int i) {
    double v = 0.0;
    for (int j = 0; j < d2; ++j) v += (*c)[static_cast<std::size_t>(i) * d2 + j] * y[j];
    return v;
  };

  ObjectiveSpec o;
  o.name = "quadratic_saddle";
  o.d1 = d1;
  o.d2 = d2;
  o.eval = [a, b, d1, c_y](Vec x, Vec y) {
    double cross = 0.0;
    for (int i = 0; i < d1; ++i) cross += x[i] * c_y(y, i);
    return 0.5 * a * sq(x) - 0.5 * b * sq(y) + cross;
  };
  o.upper_bound = [a, b, d2, ct_x](Vec x) {
    double t = 0.0;
    for (int j = 0; j < d2; ++j) t += ct_x(x, j) * ct_x(x, j);
    return 0.5 * a * sq(x) + t / (2.0 * b);
  };
  o.lower_bound = [a, b, d1, c_y](Vec y) {
    double t = 0.0;
    for (int i = 0; i < d1; ++i) t += c_y(y, i) * c_y(y, i);
    return -0.5 * b * sq(y) - t / (2.0 * a);
  };

  const double c_upper = 0.5 * a + s * s / (2.0 * b);
  const double c_lower = 0.5 * b + s * s / (2.0 * a);
  o.constants.c_upper = c_upper;
  o.constants.c_lower = c_lower;
  // |w|^2 <= 2|y|^2 + 2|v|^2 for w = y + s v, and symmetrically for x + s u.
  o.constants.c_e = 2.0 * std::max(c_upper, c_lower);
  o.constants.l_e = std::max({a, b, s});
  o.known_saddle = std::make_pair(Point(static_cast<std::size_t>(d1), 0.0), Point(static_cast<std::size_t>(d2), 0.0));
  return o;
}

ObjectiveSpec quadratic_saddle(double a, double b, int d, double coupling_diag) {
  std::vector<double> c(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i) * d + i] = coupling_diag;
  return quadratic_saddle(a, b, d, d, std::move(c));
}

ObjectiveSpec nonconvex_saddle(double wiggle, int dim, double r_cut, int n_samples, std::uint64_t seed) {
  if (!(wiggle >= 0)) throw std::invalid_argument("nonconvex_saddle: wiggle must be >= 0");
  ObjectiveSpec o;
  o.name = "nonconvex_saddle";
  o.d1 = dim;
  o.d2 = dim;
  o.eval = [wiggle](Vec x, Vec y) {
    double v = dot(x, y);
    for (double xi : x) v += wiggle_f(xi, wiggle);
    for (double yi : y) v -= wiggle_f(yi, wiggle);
    return v;
  };
  // sup_y (x.y - sum f(y)) <= sup_y (x.y - |y|^2/2) = |x|^2/2, since f(s) >= s^2/2.
  o.upper_bound = [wiggle](Vec x) {
    double v = 0.5 * sq(x);
    for (double xi : x) v += wiggle_f(xi, wiggle);
    return v;
  };
  o.lower_bound = [wiggle](Vec y) {
    double v = -0.5 * sq(y);
    for (double yi : y) v -= wiggle_f(yi, wiggle);
    return v;
  };
  o.known_saddle = std::make_pair(Point(static_cast<std::size_t>(dim), 0.0), Point(static_cast<std::size_t>(dim), 0.0));
  o.constants = estimate_constants(o, r_cut, n_samples, RngStream(seed));
  return o;
}

ObjectiveSpec zero_objective(int d1, int d2) {
  ObjectiveSpec o;
  o.name = "zero";
  o.d1 = d1;
  o.d2 = d2;
  o.eval = [](Vec, Vec) { return 0.0; };
  o.upper_bound = [](Vec) { return 0.0; };
  o.lower_bound = [](Vec) { return 0.0; };
  return o;
}

ObjectiveConstants estimate_constants(const ObjectiveSpec& obj, double r_cut, int n_samples, const RngStream& stream) {
  if (n_samples < 1000) throw std::invalid_argument("estimate_constants: n_samples must be >= 1000");
  const TupleSampler ts{stream, r_cut};
  Tuple t(obj.d1, obj.d2);
  Ratios sup{0, 0, 0, 0, 0};
  for (int i = 0; i < n_samples; ++i) {
    const auto idx = static_cast<std::uint32_t>(i);
    draw_tuple(ts, idx, t);
    const Ratios r = ratios(obj, t, ts.scalar(idx, 0));
    sup.lipschitz = std::max(sup.lipschitz, r.lipschitz);
    sup.upper_growth = std::max(sup.upper_growth, r.upper_growth);
    sup.lower_growth = std::max(sup.lower_growth, r.lower_growth);
    sup.gap_lower = std::max(sup.gap_lower, r.gap_lower);
    sup.gap_upper = std::max(sup.gap_upper, r.gap_upper);
  }
  ObjectiveConstants c;
  c.l_e = kConstantSafetyFactor * sup.lipschitz;
  c.c_upper = kConstantSafetyFactor * sup.upper_growth;
  c.c_lower = kConstantSafetyFactor * sup.lower_growth;
  c.c_e = kConstantSafetyFactor * std::max(sup.gap_lower, sup.gap_upper);
  return c;
}

double ConditionReport::worst_margin() const {
  return std::max({lipschitz_margin, sandwich_margin, upper_growth_margin, lower_growth_margin, gap_lower_margin,
                   gap_upper_margin});
}

ConditionReport check_conditions(const ObjectiveSpec& obj, double r_cut, double tol, int n_samples,
                                 const RngStream& stream) {
  const TupleSampler ts{stream, r_cut};
  const ObjectiveConstants& c = obj.constants;
  ConditionReport rep;
  rep.n_samples = n_samples;
  Tuple t(obj.d1, obj.d2);
  for (int i = 0; i < n_samples; ++i) {
    const auto idx = static_cast<std::uint32_t>(i);
    draw_tuple(ts, idx, t);
    bool bad = false;
    auto track = [&](double& worst, double margin) {
      worst = std::max(worst, margin);
      if (!(margin <= tol)) bad = true;
    };
    const double e = obj.eval(t.x, t.y);
    const double ep = obj.eval(t.xp, t.yp);
    const double dist = norm(shifted(t.x, t.xp, -1.0)) + norm(shifted(t.y, t.yp, -1.0));
    const double weight = 1.0 + norm(t.x) + norm(t.xp) + norm(t.y) + norm(t.yp);
    track(rep.lipschitz_margin, std::abs(e - ep) - c.l_e * weight * dist);

    const double up = obj.upper_bound(t.x);
    const double lo = obj.lower_bound(t.y);
    track(rep.sandwich_margin, std::max(lo - e, e - up));
    track(rep.upper_growth_margin, up - c.c_upper * (1.0 + sq(t.x)));
    track(rep.lower_growth_margin, -lo - c.c_lower * (1.0 + sq(t.y)));

    for (double s : {0.0, 0.5, 1.0}) {
      const double gl = e - obj.lower_bound(shifted(t.y, t.v, s));
      const double gu = obj.upper_bound(shifted(t.x, t.u, s)) - e;
      track(rep.gap_lower_margin, gl - c.c_e * (1.0 + sq(t.x) + sq(t.y) + sq(t.v)));
      track(rep.gap_upper_margin, gu - c.c_e * (1.0 + sq(t.x) + sq(t.y) + sq(t.u)));
    }
    if (bad) ++rep.violations;
  }
  return rep;
}

}  // namespace cbm
