#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace comet {

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard, and all floating-point draws are derived from its raw 64-bit
// output here rather than through <random> distributions (whose sequences
// are implementation-defined), so identical seeds give identical results
// on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; stateless (no cached spare).
  double normal();

  std::vector<double> normals(std::size_t n);

  // Index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

// Independent substream seed: SplitMix64 finalizer over (root, stream).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace comet
