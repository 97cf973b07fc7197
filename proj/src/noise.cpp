#include "contcount/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace contcount {

namespace {

// Uniform in [0, 1) from the top 53 bits, so the polar transform below works
// on exactly representable inputs.
inline double unit_from_bits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

double NoiseSource::standard_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Marsaglia polar method: exact Gaussian pair from uniforms in the unit
  // disk; one is returned, the other cached.
  for (;;) {
    const double u = 2.0 * unit_from_bits(next_bits()) - 1.0;
    const double v = 2.0 * unit_from_bits(next_bits()) - 1.0;
    const double s = u * u + v * v;
    if (s >= 1.0 || s == 0.0) continue;
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }
}

std::uint64_t SecureNoiseSource::next_bits() {
  static_assert(std::random_device::max() == 0xFFFFFFFFu &&
                    std::random_device::min() == 0u,
                "SecureNoiseSource assumes a full-range 32-bit random_device");
  const std::uint64_t hi = device_();
  const std::uint64_t lo = device_();
  return (hi << 32) | lo;
}

std::unique_ptr<NoiseSource> make_secure_source() {
  return std::make_unique<SecureNoiseSource>();
}

std::unique_ptr<NoiseSource> make_seeded_source(std::uint64_t seed) {
  return std::make_unique<DeterministicNoiseSource>(seed);
}

std::vector<double> sample_noise(NoiseScale scale, std::size_t dim,
                                 NoiseSource& source) {
  if (dim == 0) {
    throw std::invalid_argument("sample_noise: dim must be >= 1");
  }
  if (!(scale.variance >= 0.0)) {
    throw std::invalid_argument("sample_noise: variance must be nonnegative");
  }
  std::vector<double> out(dim, 0.0);
  if (scale.variance == 0.0) return out;
  const double sigma = std::sqrt(scale.variance);
  for (auto& v : out) v = sigma * source.standard_normal();
  return out;
}

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64_mix(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

}  // namespace contcount
