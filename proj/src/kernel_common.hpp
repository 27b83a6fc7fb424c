#ifndef CBM_KERNEL_COMMON_HPP
#define CBM_KERNEL_COMMON_HPP

#include <cmath>
#include <span>

#include "cbm/core.hpp"
#include "cbm/kernels.hpp"

namespace cbm::kernels::detail {

// s^q with exact repeated multiplication for small integer q.
inline double pow_q(double s, double q) {
  if (q == 1.0) return s;
  if (q == 2.0) return s * s;
  if (q == 4.0) {
    const double s2 = s * s;
    return s2 * s2;
  }
  return std::pow(s, q);
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// One Euler-Maruyama row update; shared verbatim by both backends.
inline void step_row(std::span<double> z, std::span<const double> m, double lambda, double sigma,
                     const CutoffSpec& cutoff, std::span<const double> dw, double dt) {
  const double amp = sigma == 0.0 ? 0.0 : sigma * phi(cutoff, z);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double dev = z[k] - m[k];
    z[k] = z[k] - lambda * dev * dt + amp * dev * dw[k];
  }
}

inline bool row_finite(std::span<const double> z) {
  for (double v : z)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace cbm::kernels::detail

#endif  // CBM_KERNEL_COMMON_HPP
