#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "contcount/core.hpp"

namespace contcount {

// Source of randomness for Gaussian noise. Implementations provide uniform
// 64-bit words; standard_normal() turns them into exact N(0,1) draws via the
// Marsaglia polar method (no table approximation, true normal tails).
// standard_normal() is virtual so tests can script noise values.
//
// A source is exclusive-access: each mechanism instance owns its own.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;

  virtual std::uint64_t next_bits() = 0;
  virtual double standard_normal();

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Backed by std::random_device. The default for real use: noise must be
// unpredictable for the privacy guarantee to mean anything.
class SecureNoiseSource final : public NoiseSource {
 public:
  SecureNoiseSource() = default;
  std::uint64_t next_bits() override;

 private:
  std::random_device device_;
};

// Seedable mt19937_64 source. Reproducible, therefore NOT private; intended
// for tests and benchmarks only.
class DeterministicNoiseSource final : public NoiseSource {
 public:
  explicit DeterministicNoiseSource(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_bits() override { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::unique_ptr<NoiseSource> make_secure_source();
std::unique_ptr<NoiseSource> make_seeded_source(std::uint64_t seed);

// dim independent N(0, scale.variance) draws; variance 0 returns zeros
// without consuming the source.
std::vector<double> sample_noise(NoiseScale scale, std::size_t dim,
                                 NoiseSource& source);

// Seed for the i-th independent stream derived from a master seed. O(1)
// random access (splitmix64 of master + (i+1) * golden gamma) so parallel
// trial workers need no coordination.
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index);

}  // namespace contcount
