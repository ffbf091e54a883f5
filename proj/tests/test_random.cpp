#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qbot/random.hpp>

#include <vector>

using qbot::RandomStream;

TEST_CASE("same seed reproduces the draw sequence") {
  RandomStream a(12345);
  RandomStream b(12345);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
  CHECK(a.draws() == b.draws());
}

TEST_CASE("uniform draws stay in [0, 1)") {
  RandomStream rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("bernoulli endpoints are exact") {
  RandomStream rng(3);
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(rng.bernoulli(0.0));
    CHECK(rng.bernoulli(1.0));
  }
}

TEST_CASE("substreams are independent of sibling creation") {
  RandomStream master(42);
  RandomStream alice_alone = master.substream("alice");

  RandomStream master2(42);
  RandomStream alice2 = master2.substream("alice");
  RandomStream bob = master2.substream("bob");
  (void)bob.uniform();  // consuming bob must not perturb alice

  for (int i = 0; i < 100; ++i) CHECK(alice_alone.uniform() == alice2.uniform());
}

TEST_CASE("substreams with different names diverge") {
  RandomStream master(42);
  RandomStream a = master.substream("alice");
  RandomStream b = master.substream("bob");
  CHECK(a.seed() != b.seed());

  int identical = 0;
  for (int i = 0; i < 100; ++i)
    if (a.uniform() == b.uniform()) ++identical;
  CHECK(identical == 0);
}

TEST_CASE("draw counter tracks engine consumption") {
  RandomStream rng(9);
  CHECK(rng.draws() == 0);
  rng.uniform();
  CHECK(rng.draws() == 1);
  rng.gaussian(0.0, 1.0);  // two uniforms
  CHECK(rng.draws() == 3);
}

TEST_CASE("frozen sequence guards cross-version drift") {
  // mt19937_64 is pinned by the standard; this freezes the first draws of
  // seed 1 so an accidental engine or transform change shows up loudly.
  RandomStream rng(1);
  const std::vector<std::uint64_t> expected = {2469588189546311528ULL,
                                               2516265689700432462ULL,
                                               8323445853463659930ULL};
  for (std::uint64_t want : expected) {
    const double u = rng.uniform();
    CHECK(u == static_cast<double>(want >> 11) * 0x1.0p-53);
  }
}

TEST_CASE("gaussian moments are sane") {
  RandomStream rng(2024);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.gaussian(3.0, 2.0);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.01));
  CHECK(var == doctest::Approx(4.0).epsilon(0.05));
}
