#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "casp/rng.hpp"

using casp::CounterRng;

// Frozen outputs of an independent reimplementation of the generator
// (SplitMix64 finalizer over key + counter * golden ratio). These pins lock
// the exact stream so every seeded artifact in the project is reproducible
// across refactors.
TEST_CASE("u64 stream pins") {
  CounterRng rng(42);
  CHECK(rng.next_u64() == UINT64_C(10133392858939518499));
  CHECK(rng.next_u64() == UINT64_C(16657315498792755040));
  CHECK(rng.next_u64() == UINT64_C(16961100815764119852));
}

TEST_CASE("substream pins and independence") {
  CHECK(CounterRng(42).substream(7).next_u64() == UINT64_C(368521987483226920));

  CounterRng base(42);
  const std::uint64_t root_first = CounterRng(42).next_u64();
  CounterRng child = base.substream(7);
  // Deriving a substream must not disturb the parent stream.
  CHECK(base.next_u64() == root_first);
  CHECK(child.next_u64() == UINT64_C(368521987483226920));

  // Distinct tags give distinct streams; same tag twice gives the same stream.
  CHECK(CounterRng(42).substream(7).next_u64() != CounterRng(42).substream(8).next_u64());
  CHECK(CounterRng(42).substream(7).next_u64() == CounterRng(42).substream(7).next_u64());
}

TEST_CASE("double pin and range") {
  CounterRng rng(1);
  CHECK(rng.next_double() == doctest::Approx(0.56311759882726919).epsilon(1e-15));
  CounterRng rng2(99);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng2.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("sample_without_replacement pin and properties") {
  CounterRng rng = CounterRng(123).substream(3);
  const std::vector<int> got = rng.sample_without_replacement(10, 4);
  CHECK(got == std::vector<int>{1, 4, 9, 6});

  CounterRng rng2(77);
  const std::vector<int> all = rng2.sample_without_replacement(8, 8);
  std::set<int> seen(all.begin(), all.end());
  CHECK(seen.size() == 8);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 7);
}

TEST_CASE("discrete pin and edge cases") {
  const std::vector<double> probs = {0.2, 0.3, 0.5};
  const std::vector<int> want = {2, 0, 1, 1, 0, 1};
  for (int i = 0; i < 6; ++i) {
    CounterRng rng = CounterRng(5).substream(static_cast<std::uint64_t>(i));
    CHECK(rng.discrete(probs) == want[static_cast<std::size_t>(i)]);
  }

  // Degenerate rows always return the single supported index.
  CounterRng rng(9);
  const std::vector<double> point_mass = {0.0, 1.0, 0.0};
  for (int i = 0; i < 20; ++i) CHECK(rng.discrete(point_mass) == 1);
}

TEST_CASE("bernoulli and normal moments") {
  CounterRng rng(2024);
  int hits = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3) ? 1 : 0;
  const double rate = static_cast<double>(hits) / n;
  CHECK(std::abs(rate - 0.3) < 0.02);

  CounterRng rng2(7);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng2.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("counter streams do not collide across nearby seeds") {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 64; ++s) firsts.insert(CounterRng(s).next_u64());
  CHECK(firsts.size() == 64);
}
