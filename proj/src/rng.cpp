#include "cbm/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cbm {

namespace {

constexpr std::uint32_t kW32A = 0x9E3779B9u;
constexpr std::uint32_t kW32B = 0xBB67AE85u;
constexpr std::uint32_t kM4x32A = 0xD2511F53u;
constexpr std::uint32_t kM4x32B = 0xCD9E8D57u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

constexpr std::uint32_t kMaxBlock = 1u << 24;

// 53-bit uniform in (0, 1].
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kM4x32A, ctr[0], lo0, hi0);
    mulhilo(kM4x32B, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW32A;
    key[1] += kW32B;
  }
  return ctr;
}

PhiloxCounter RngStream::block(std::uint32_t index) const {
  if (index >= kMaxBlock) throw std::out_of_range("RngStream: block index exceeds 2^24");
  const PhiloxCounter ctr{step_, particle_, trial_,
                          (static_cast<std::uint32_t>(species_) << 24) | index};
  const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32(ctr, key);
}

double RngStream::uniform(std::uint32_t i) const {
  const auto b = block(i / 2);
  return (i % 2 == 0) ? to_unit(b[0], b[1]) : to_unit(b[2], b[3]);
}

void RngStream::normals(std::span<double> out, std::uint32_t offset) const {
  // Box-Muller: each block yields one pair of normals.
  std::size_t k = 0;
  std::uint32_t idx = offset;
  while (k < out.size()) {
    const auto b = block(idx / 2);
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    if (idx % 2 == 0) {
      out[k++] = r * std::cos(theta);
      ++idx;
      if (k == out.size()) break;
    }
    out[k++] = r * std::sin(theta);
    ++idx;
  }
}

void gaussian_increment(const RngStream& stream, double dt, std::span<double> out) {
  stream.normals(out);
  const double s = std::sqrt(dt);
  for (double& v : out) v *= s;
}

std::vector<double> gaussian_increment(const RngStream& stream, int dim, double dt) {
  std::vector<double> out(static_cast<std::size_t>(dim));
  gaussian_increment(stream, dt, out);
  return out;
}

}  // namespace cbm
