#include <catch2/catch_amalgamated.hpp>

#include "gtr/rng.hpp"

using gtr::RngStream;

TEST_CASE("streams are reproducible and independent of batching") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  RngStream c(42, 7), d(42, 7);
  std::uint64_t x = 0, y = 0;
  for (int i = 0; i < 10; ++i) x ^= c.next_u64();
  c.uniform01();
  for (int i = 0; i < 10; ++i) y ^= d.next_u64();
  REQUIRE(x == y);
}

TEST_CASE("different seeds and streams decorrelate") {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int eq_ab = 0, eq_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    eq_ab += (va == b.next_u64());
    eq_ac += (va == c.next_u64());
  }
  REQUIRE(eq_ab == 0);
  REQUIRE(eq_ac == 0);
}

TEST_CASE("uniform01 range and moments") {
  RngStream r(1, 0);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  REQUIRE(std::abs(mean - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
  REQUIRE(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("below is unbiased over small ranges") {
  RngStream r(9, 1);
  int counts[5] = {0, 0, 0, 0, 0};
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++counts[r.below(5)];
  for (int c : counts) REQUIRE(std::abs(c - n / 5.0) < 3.0 * std::sqrt(n * 0.2 * 0.8));
}

TEST_CASE("normal has the right first two moments") {
  RngStream r(5, 2);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sum_sq += z * z;
  }
  REQUIRE(std::abs(sum / n) < 3.0 / std::sqrt(static_cast<double>(n)));
  REQUIRE(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("derive separates trial substreams") {
  REQUIRE(RngStream::derive(1, 2) != RngStream::derive(2, 1));
  REQUIRE(RngStream::derive(0, 0) != RngStream::derive(0, 1));
  REQUIRE(RngStream::hash_name("alpha") != RngStream::hash_name("beta"));
}
