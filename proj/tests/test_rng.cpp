#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pgo/rng.hpp"

using pgo::Rng;

TEST_CASE("same seed reproduces the stream exactly") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(42), d(43);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    if (c.next_u64() == d.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0, 1) with sane moments") {
  Rng rng(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(sum / n == Catch::Approx(0.5).margin(0.005));
  CHECK(sum2 / n - (sum / n) * (sum / n) ==
        Catch::Approx(1.0 / 12.0).margin(0.002));
}

TEST_CASE("uniform_int is in range and roughly balanced") {
  Rng rng(11);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.uniform_int(10);
    REQUIRE(v < 10);
    ++counts[v];
  }
  for (int c : counts) {
    CHECK(c > n / 10 - 600);
    CHECK(c < n / 10 + 600);
  }
}

TEST_CASE("gaussian moments match the standard normal") {
  Rng rng(3);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    s1 += g;
    s2 += g * g;
    s3 += g * g * g;
    s4 += g * g * g * g;
  }
  CHECK(s1 / n == Catch::Approx(0.0).margin(0.01));
  CHECK(s2 / n == Catch::Approx(1.0).margin(0.02));
  CHECK(s3 / n == Catch::Approx(0.0).margin(0.05));
  CHECK(s4 / n == Catch::Approx(3.0).margin(0.1));
}

TEST_CASE("mix derives distinct child seeds") {
  const auto a = Rng::mix(5, 0);
  const auto b = Rng::mix(5, 1);
  const auto c = Rng::mix(6, 0);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(Rng::mix(5, 0) == a);
}
