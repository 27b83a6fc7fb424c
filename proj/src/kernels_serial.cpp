#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cbm/kernels.hpp"
#include "kernel_common.hpp"

namespace cbm::kernels {

void project_to_ball(std::span<double> z, double r) {
  double len = norm(z);
  if (len <= r) return;
  double scale = r / len;
  // Rounding can leave the rescaled row a few ulps outside; shrink until it is not.
  for (int attempt = 0; attempt < 8 && len > r; ++attempt) {
    for (double& v : z) v *= scale;
    len = norm(z);
    scale = std::nextafter(1.0, 0.0);
  }
}

namespace serial {

void mean(const Ensemble& e, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < e.n; ++i) {
    const auto r = e.row(i);
    for (int k = 0; k < e.dim; ++k) out[k] += r[k];
  }
  for (double& v : out) v /= e.n;
}

double central_moment(const Ensemble& e, std::span<const double> center, double q) {
  double acc = 0.0;
  for (int i = 0; i < e.n; ++i) acc += detail::pow_q(detail::sq_dist(e.row(i), center), q);
  return acc / e.n;
}

void row_map(const Ensemble& e, const std::function<double(std::span<const double>)>& f, std::span<double> out) {
  for (int i = 0; i < e.n; ++i) out[i] = f(e.row(i));
}

double weighted_average(const Ensemble& e, std::span<const double> log_w, double shift, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  double z = 0.0;
  for (int i = 0; i < e.n; ++i) {
    const double w = std::exp(log_w[i] - shift);
    z += w;
    const auto r = e.row(i);
    for (int k = 0; k < e.dim; ++k) out[k] += w * r[k];
  }
  for (double& v : out) v /= z;
  return z;
}

double coupling_distance(const Ensemble& a, const Ensemble& b) {
  if (a.n != b.n || a.dim != b.dim) throw std::invalid_argument("coupling_distance: size mismatch");
  double acc = 0.0;
  for (int i = 0; i < a.n; ++i) acc += detail::sq_dist(a.row(i), b.row(i));
  return acc / a.n;
}

void fill_noise(const RngStream& base, std::uint32_t trial, Species species, std::span<const std::uint32_t> labels,
                std::uint32_t step, int dim, double dt, std::span<double> out) {
  const auto n = labels.size();
  for (std::size_t i = 0; i < n; ++i)
    gaussian_increment(base.at(trial, species, labels[i], step), dt, out.subspan(i * dim, dim));
}

StepStatus drift_diffusion_step(Ensemble& e, std::span<const double> m, double lambda, double sigma,
                                const CutoffSpec& cutoff, std::span<const double> noise, double dt, bool project) {
  StepStatus st;
  for (int i = 0; i < e.n; ++i) {
    auto z = e.row(i);
    detail::step_row(z, m, lambda, sigma, cutoff, noise.subspan(static_cast<std::size_t>(i) * e.dim, e.dim), dt);
    if (st.first_nonfinite_row < 0 && !detail::row_finite(z)) st.first_nonfinite_row = i;
    if (project)
      project_to_ball(z, cutoff.r_cut);
    else if (norm(z) > cutoff.r_cut)
      ++st.rows_outside_ball;
  }
  return st;
}

}  // namespace serial
}  // namespace cbm::kernels
