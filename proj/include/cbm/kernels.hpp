#ifndef CBM_KERNELS_HPP
#define CBM_KERNELS_HPP

#include <cstdint>
#include <functional>
#include <span>

#include "cbm/core.hpp"
#include "cbm/rng.hpp"

// Inner loops of the particle system. Two implementations share one
// signature set:
//
//   serial::  straightforward loops; the reference the tests compare against.
//   omp::     OpenMP-parallel. Reductions accumulate fixed blocks of
//             kReduceRows rows and combine the partials in block order, so
//             results are bit-identical for every thread count (but may
//             differ from serial:: in the last few ulps).
//
// Elementwise kernels (noise, drift/diffusion step) are bit-identical
// between the two.

namespace cbm::kernels {

inline constexpr int kReduceRows = 128;
/// Below this many rows the omp kernels stay on the calling thread.
inline constexpr int kParallelMinRows = 512;

struct StepStatus {
  int first_nonfinite_row = -1;
  int rows_outside_ball = 0;  // counted only when projection is off
};

/// Radially rescales z onto the closed ball of radius r if it lies outside.
void project_to_ball(std::span<double> z, double r);

namespace serial {

void mean(const Ensemble& e, std::span<double> out);
/// (1/n) sum |x_i - center|^{2q}
double central_moment(const Ensemble& e, std::span<const double> center, double q);
/// out_i = f(row_i)
void row_map(const Ensemble& e, const std::function<double(std::span<const double>)>& f, std::span<double> out);
/// out = sum_i exp(log_w_i - shift) x_i / sum_i exp(log_w_i - shift); returns the normaliser.
double weighted_average(const Ensemble& e, std::span<const double> log_w, double shift, std::span<double> out);
/// (1/n) sum |a_i - b_i|^2
double coupling_distance(const Ensemble& a, const Ensemble& b);
/// Row i gets N(0, dt I) drawn at base.at(trial, species, labels[i], step).
void fill_noise(const RngStream& base, std::uint32_t trial, Species species, std::span<const std::uint32_t> labels,
                std::uint32_t step, int dim, double dt, std::span<double> out);
/// z <- z - lambda (z - m) dt + sigma phi(z) (z - m) .* dW, then optional projection.
StepStatus drift_diffusion_step(Ensemble& e, std::span<const double> m, double lambda, double sigma,
                                const CutoffSpec& cutoff, std::span<const double> noise, double dt, bool project);

}  // namespace serial

namespace omp {

void mean(const Ensemble& e, std::span<double> out);
double central_moment(const Ensemble& e, std::span<const double> center, double q);
void row_map(const Ensemble& e, const std::function<double(std::span<const double>)>& f, std::span<double> out);
double weighted_average(const Ensemble& e, std::span<const double> log_w, double shift, std::span<double> out);
double coupling_distance(const Ensemble& a, const Ensemble& b);
void fill_noise(const RngStream& base, std::uint32_t trial, Species species, std::span<const std::uint32_t> labels,
                std::uint32_t step, int dim, double dt, std::span<double> out);
StepStatus drift_diffusion_step(Ensemble& e, std::span<const double> m, double lambda, double sigma,
                                const CutoffSpec& cutoff, std::span<const double> noise, double dt, bool project);

}  // namespace omp

}  // namespace cbm::kernels

#endif  // CBM_KERNELS_HPP
