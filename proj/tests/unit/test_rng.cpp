#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "trussnet/rng.hpp"

using tn::Rng;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (a.next_u64() == b.next_u64());
  CHECK(same == 0);
}

TEST_CASE("uniform stays in range and fills it") {
  Rng r(7);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("below is in range and roughly uniform") {
  Rng r(3);
  int counts[10] = {};
  for (int i = 0; i < 100000; ++i) {
    auto v = r.below(10);
    REQUIRE(v < 10);
    counts[v]++;
  }
  for (int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
}

TEST_CASE("normal has near-standard moments") {
  Rng r(11);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("substreams are independent of parent draw position") {
  Rng a(99);
  Rng b(99);
  (void)b.next_u64();  // advancing the parent must not change substreams
  Rng sa = a.substream("paths", 5);
  Rng sb = b.substream("paths", 5);
  for (int i = 0; i < 16; ++i) CHECK(sa.next_u64() == sb.next_u64());
}

TEST_CASE("substreams with different labels or indices differ") {
  Rng root(123);
  auto first = root.substream("alpha", 0).next_u64();
  CHECK(first != root.substream("alpha", 1).next_u64());
  CHECK(first != root.substream("beta", 0).next_u64());
}

TEST_CASE("fnv1a distinguishes nearby strings") {
  std::set<std::uint64_t> seen;
  seen.insert(tn::fnv1a("a"));
  seen.insert(tn::fnv1a("b"));
  seen.insert(tn::fnv1a("ab"));
  seen.insert(tn::fnv1a("ba"));
  seen.insert(tn::fnv1a(""));
  CHECK(seen.size() == 5);
}
