#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cbm/kernels.hpp"
#include "kernel_common.hpp"

namespace cbm::kernels::omp {

namespace {

int num_blocks(int n) { return (n + kReduceRows - 1) / kReduceRows; }

// Runs body(block, begin, end) for every fixed-size row block.
template <class Body>
void for_blocks(int n, Body&& body) {
  const int nb = num_blocks(n);
#pragma omp parallel for schedule(static) if (n >= kParallelMinRows)
  for (int b = 0; b < nb; ++b) body(b, b * kReduceRows, std::min(n, (b + 1) * kReduceRows));
}

}  // namespace

void mean(const Ensemble& e, std::span<double> out) {
  const int d = e.dim;
  std::vector<double> partial(static_cast<std::size_t>(num_blocks(e.n)) * d, 0.0);
  for_blocks(e.n, [&](int b, int lo, int hi) {
    double* p = partial.data() + static_cast<std::size_t>(b) * d;
    for (int i = lo; i < hi; ++i) {
      const auto r = e.row(i);
      for (int k = 0; k < d; ++k) p[k] += r[k];
    }
  });
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t b = 0; b < partial.size() / d; ++b)
    for (int k = 0; k < d; ++k) out[k] += partial[b * d + k];
  for (double& v : out) v /= e.n;
}

double central_moment(const Ensemble& e, std::span<const double> center, double q) {
  std::vector<double> partial(static_cast<std::size_t>(num_blocks(e.n)), 0.0);
  for_blocks(e.n, [&](int b, int lo, int hi) {
    double acc = 0.0;
    for (int i = lo; i < hi; ++i) acc += detail::pow_q(detail::sq_dist(e.row(i), center), q);
    partial[b] = acc;
  });
  double acc = 0.0;
  for (double p : partial) acc += p;
  return acc / e.n;
}

void row_map(const Ensemble& e, const std::function<double(std::span<const double>)>& f, std::span<double> out) {
  const int n = e.n;
#pragma omp parallel for schedule(static) if (n >= kParallelMinRows)
  for (int i = 0; i < n; ++i) out[i] = f(e.row(i));
}

double weighted_average(const Ensemble& e, std::span<const double> log_w, double shift, std::span<double> out) {
  const int d = e.dim;
  const int nb = num_blocks(e.n);
  // Per block: d weighted coordinate sums followed by the weight sum.
  std::vector<double> partial(static_cast<std::size_t>(nb) * (d + 1), 0.0);
  for_blocks(e.n, [&](int b, int lo, int hi) {
    double* p = partial.data() + static_cast<std::size_t>(b) * (d + 1);
    for (int i = lo; i < hi; ++i) {
      const double w = std::exp(log_w[i] - shift);
      p[d] += w;
      const auto r = e.row(i);
      for (int k = 0; k < d; ++k) p[k] += w * r[k];
    }
  });
  std::fill(out.begin(), out.end(), 0.0);
  double z = 0.0;
  for (int b = 0; b < nb; ++b) {
    const double* p = partial.data() + static_cast<std::size_t>(b) * (d + 1);
    for (int k = 0; k < d; ++k) out[k] += p[k];
    z += p[d];
  }
  for (double& v : out) v /= z;
  return z;
}

double coupling_distance(const Ensemble& a, const Ensemble& b) {
  if (a.n != b.n || a.dim != b.dim) throw std::invalid_argument("coupling_distance: size mismatch");
  std::vector<double> partial(static_cast<std::size_t>(num_blocks(a.n)), 0.0);
  for_blocks(a.n, [&](int blk, int lo, int hi) {
    double acc = 0.0;
    for (int i = lo; i < hi; ++i) acc += detail::sq_dist(a.row(i), b.row(i));
    partial[blk] = acc;
  });
  double acc = 0.0;
  for (double p : partial) acc += p;
  return acc / a.n;
}

void fill_noise(const RngStream& base, std::uint32_t trial, Species species, std::span<const std::uint32_t> labels,
                std::uint32_t step, int dim, double dt, std::span<double> out) {
  const auto n = static_cast<std::int64_t>(labels.size());
#pragma omp parallel for schedule(static) if (n >= kParallelMinRows)
  for (std::int64_t i = 0; i < n; ++i)
    gaussian_increment(base.at(trial, species, labels[i], step), dt,
                       out.subspan(static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)));
}

StepStatus drift_diffusion_step(Ensemble& e, std::span<const double> m, double lambda, double sigma,
                                const CutoffSpec& cutoff, std::span<const double> noise, double dt, bool project) {
  const int n = e.n;
  const int d = e.dim;
  int first_bad = n;
  int outside = 0;
#pragma omp parallel for schedule(static) reduction(min : first_bad) reduction(+ : outside) if (n >= kParallelMinRows)
  for (int i = 0; i < n; ++i) {
    auto z = e.row(i);
    detail::step_row(z, m, lambda, sigma, cutoff, noise.subspan(static_cast<std::size_t>(i) * d, d), dt);
    if (!detail::row_finite(z)) first_bad = std::min(first_bad, i);
    if (project)
      project_to_ball(z, cutoff.r_cut);
    else if (norm(z) > cutoff.r_cut)
      ++outside;
  }
  return {first_bad == n ? -1 : first_bad, outside};
}

}  // namespace cbm::kernels::omp
