#include "cbm/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cbm/consensus.hpp"
#include "cbm/kernels.hpp"

namespace cbm {

std::vector<std::pair<std::string, std::vector<double>>> TrajectoryStats::columns() const {
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  cols.emplace_back("t", times);
  const std::pair<const char*, const MomentSeries*> groups[] = {
      {"x_sys", &v_x_sys}, {"y_sys", &v_y_sys}, {"x_bar", &v_x_bar},
      {"y_bar", &v_y_bar}, {"x_ref", &v_x_ref}, {"y_ref", &v_y_ref}};
  for (const auto& [tag, series] : groups)
    for (std::size_t j = 0; j < kMomentOrders.size(); ++j)
      cols.emplace_back("v" + std::to_string(static_cast<int>(2 * kMomentOrders[j])) + "_" + tag, (*series)[j]);
  cols.emplace_back("d_x", d_x);
  cols.emplace_back("d_y", d_y);
  auto point_columns = [&](const char* prefix, const std::vector<Point>& pts) {
    const std::size_t dim = pts.empty() ? 0 : pts.front().size();
    for (std::size_t k = 0; k < dim; ++k) {
      std::vector<double> c(pts.size());
      for (std::size_t r = 0; r < pts.size(); ++r) c[r] = pts[r][k];
      cols.emplace_back(prefix + std::to_string(k), std::move(c));
    }
  };
  point_columns("cx_", consensus_x);
  point_columns("cy_", consensus_y);
  cols.emplace_back("sup_wvar_x", sup_weighted_var_x);
  cols.emplace_back("sup_wvar_y", sup_weighted_var_y);
  return cols;
}

double generalized_variance(const Ensemble& e, double q) {
  if (e.n < 1) throw std::invalid_argument("generalized_variance: empty ensemble");
  const Point m = mean(e);
  return kernels::omp::central_moment(e, m, q);
}

double coupling_distance(const Ensemble& a, const Ensemble& b) { return kernels::omp::coupling_distance(a, b); }

double exact_w2_squared(const Ensemble& a, const Ensemble& b) {
  if (a.n != b.n || a.dim != b.dim) throw std::invalid_argument("exact_w2_squared: size mismatch");
  if (a.n > kMaxAssignmentSize) throw std::invalid_argument("exact_w2_squared: n exceeds the assignment size cap");
  const int n = a.n;
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      const auto ra = a.row(i), rb = b.row(j);
      for (int k = 0; k < a.dim; ++k) s += (ra[k] - rb[k]) * (ra[k] - rb[k]);
      cost[static_cast<std::size_t>(i) * n + j] = s;
    }
  const auto match = solve_assignment(cost, n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i) * n + match[i]];
  return total / n;
}

double delta_d(double n, int d) {
  if (n < 2) throw std::invalid_argument("delta_d: n must be >= 2");
  if (d < 4) return 1.0 / std::sqrt(n);
  if (d == 4) return std::log(n) / std::sqrt(n);
  return std::pow(n, -2.0 / d);
}

double sup_weighted_process(const std::vector<double>& times, const std::vector<double>& values, double kappa) {
  if (times.size() != values.size() || times.empty())
    throw std::invalid_argument("sup_weighted_process: arrays must be aligned and nonempty");
  double s = -INFINITY;
  for (std::size_t k = 0; k < times.size(); ++k) s = std::max(s, std::exp(kappa * times[k]) * values[k]);
  return s;
}

std::pair<double, double> wilson_interval(int hits, int trials, double z) {
  if (trials < 1) throw std::invalid_argument("wilson_interval: trials must be >= 1");
  const double n = trials;
  const double p = hits / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

TailEstimate empirical_tail(const std::vector<double>& sups, double threshold) {
  if (sups.empty()) throw std::invalid_argument("empirical_tail: need at least one trial");
  TailEstimate t;
  t.trials = static_cast<int>(sups.size());
  t.hits = static_cast<int>(std::count_if(sups.begin(), sups.end(), [&](double s) { return s >= threshold; }));
  t.p_hat = static_cast<double>(t.hits) / t.trials;
  std::tie(t.wilson_lo, t.wilson_hi) = wilson_interval(t.hits, t.trials);
  return t;
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("least_squares: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("least_squares: need at least 3 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: abscissae are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

namespace {

// Keeps (x, log y) for y > 0.
LinearFit log_fit(const std::vector<double>& x, const std::vector<double>& y, bool log_x) {
  if (x.size() != y.size()) throw std::invalid_argument("fit: length mismatch");
  std::vector<double> fx, fy;
  int dropped = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
      ++dropped;
      continue;
    }
    fx.push_back(log_x ? std::log(x[i]) : x[i]);
    fy.push_back(std::log(y[i]));
  }
  if (fx.size() < 3) throw std::invalid_argument("fit: fewer than 3 positive values");
  LinearFit f = least_squares(fx, fy);
  f.dropped = dropped;
  return f;
}

}  // namespace

RateFit fit_exponential_rate(const std::vector<double>& times, const std::vector<double>& values) {
  const LinearFit f = log_fit(times, values, false);
  return {-f.slope, f.intercept, f.r2, f.dropped};
}

LinearFit fit_scaling_slope(const std::vector<double>& ns, const std::vector<double>& errors) {
  return log_fit(ns, errors, true);
}

}  // namespace cbm
