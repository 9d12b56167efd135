#pragma once

#include <cstdint>
#include <string>

namespace tn {

// Deterministic 64-bit generator (splitmix64 core). Hand-rolled so that
// streams are reproducible across platforms and standard library versions;
// std::mt19937 ordering is portable but the std distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1): 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller (both values used, cached).
  double normal();

  // Child stream keyed by (label, index), derived from the construction
  // seed; draws already made on the parent do not affect it. Used to give
  // every design / path / module its own substream so that work order and
  // thread count cannot change sampled values.
  Rng substream(const std::string& label, std::uint64_t index = 0) const;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used for substream labels and file layout hashes.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull);

}  // namespace tn
