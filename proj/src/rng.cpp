#include "trussnet/rng.hpp"

#include <cmath>

namespace tn {

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling over the largest multiple of n below 2^64.
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v > limit);
  return v % n;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Rng Rng::substream(const std::string& label, std::uint64_t index) const {
  std::uint64_t h = fnv1a(label);
  h = fnv1a(&index, sizeof index, h);
  std::uint64_t mixed = seed_ ^ (h + 0x9e3779b97f4a7c15ull + (seed_ << 6) + (seed_ >> 2));
  Rng child(mixed);
  // Warm up once so nearby labels decorrelate.
  child.next_u64();
  return child;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h) { return fnv1a(s.data(), s.size(), h); }

}  // namespace tn
