#ifndef CBM_RNG_HPP
#define CBM_RNG_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cbm {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: the output is a pure
// function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

enum class Species : std::uint32_t { X = 0, Y = 1, XRef = 2, YRef = 3, Aux = 4 };

/// Step coordinate reserved for initial-state sampling.
inline constexpr std::uint32_t kInitStep = 0xFFFFFFFFu;

/// A keyed position in the random-number space:
/// (base_seed; trial, species, particle, step).
///
/// Every value drawn from a stream is a pure function of the seed and the
/// coordinate tuple, so any subset of a simulation can be replayed in any
/// order on any number of threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t base_seed) : seed_(base_seed) {}

  RngStream at(std::uint32_t trial, Species species, std::uint32_t particle,
               std::uint32_t step) const {
    RngStream s(seed_);
    s.trial_ = trial;
    s.species_ = species;
    s.particle_ = particle;
    s.step_ = step;
    return s;
  }

  std::uint64_t base_seed() const { return seed_; }
  std::uint32_t trial() const { return trial_; }
  Species species() const { return species_; }
  std::uint32_t particle() const { return particle_; }
  std::uint32_t step() const { return step_; }

  /// Raw 128-bit block `index` of this coordinate (index < 2^24).
  PhiloxCounter block(std::uint32_t index) const;

  /// i-th uniform variate in (0, 1].
  double uniform(std::uint32_t i) const;

  /// Fills `out` with i.i.d. standard normals, starting at normal number
  /// `offset` of this coordinate.
  void normals(std::span<double> out, std::uint32_t offset = 0) const;

 private:
  std::uint64_t seed_;
  std::uint32_t trial_ = 0;
  Species species_ = Species::Aux;
  std::uint32_t particle_ = 0;
  std::uint32_t step_ = 0;
};

/// `out.size()` i.i.d. N(0, dt) components drawn at the stream's coordinate.
void gaussian_increment(const RngStream& stream, double dt, std::span<double> out);
std::vector<double> gaussian_increment(const RngStream& stream, int dim, double dt);

}  // namespace cbm

#endif  // CBM_RNG_HPP
