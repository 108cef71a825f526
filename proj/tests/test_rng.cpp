#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rissim/rng.hpp"

using rissim::Rng;

TEST_CASE("same seed reproduces the same sequence") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("forking does not disturb the parent stream") {
  Rng a(7);
  Rng b(7);
  (void)a.fork("child");
  (void)a.fork(123);
  for (int i = 0; i < 20; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("forks with distinct tags are distinct, same tags agree") {
  Rng root(1);
  Rng c1 = root.fork("alpha");
  Rng c2 = root.fork("alpha");
  Rng c3 = root.fork("beta");
  CHECK(c1.next_u64() == c2.next_u64());
  Rng c4 = root.fork("alpha");
  CHECK(c4.next_u64() != c3.next_u64());
}

TEST_CASE("uniform stays in [0, 1)") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform_int is unbiased over a small range") {
  Rng rng(9);
  int counts[5] = {0, 0, 0, 0, 0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(5)];
  for (const int c : counts) CHECK(std::abs(c - n / 5) < 5 * std::sqrt(n / 5.0));
  CHECK_THROWS_AS(rng.uniform_int(0), std::invalid_argument);
}

TEST_CASE("normal moments") {
  Rng rng(11);
  const int n = 200000;
  double sum = 0.0;
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("complex_normal has the requested total variance, split evenly") {
  Rng rng(13);
  const int n = 200000;
  double re2 = 0.0;
  double im2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto z = rng.complex_normal(4.0);
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
  }
  CHECK(re2 / n == doctest::Approx(2.0).epsilon(0.02));
  CHECK(im2 / n == doctest::Approx(2.0).epsilon(0.02));
}
