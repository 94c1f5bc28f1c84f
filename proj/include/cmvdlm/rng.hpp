#pragma once

#include <cstdint>
#include <random>

namespace cmvdlm {

// Seeded random stream. Streams are derived from a parent with split(), so a
// whole analysis is reproducible from one seed regardless of how work is
// divided between streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  // Independent child stream identified by `stream`. Does not advance *this.
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0x9e3779b97f4a7c15ULL)));
  }

  double normal() { return normal_(engine_); }

  double chi_square(double dof) {
    std::chi_squared_distribution<double> dist(dof);
    return dist(engine_);
  }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  // SplitMix64 finalizer.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace cmvdlm
