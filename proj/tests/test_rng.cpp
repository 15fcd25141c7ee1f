#include <doctest.h>

#include <cmath>
#include <set>

#include "core/rng.hpp"

using popest::Rng;

TEST_CASE("splitmix64 reference outputs") {
  // Published reference stream for state 0.
  std::uint64_t x = 0;
  CHECK(popest::splitmix64(x) == 0xe220a8397b1dcdafULL);
  CHECK(popest::splitmix64(x) == 0x6e789e6aa1b965f4ULL);
  CHECK(popest::splitmix64(x) == 0x06c45d188009454fULL);
}

TEST_CASE("same seed, same stream") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs = differs || va != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("derived streams are separated by label and index") {
  auto first = [](Rng r) { return r.next_u64(); };
  const auto base = first(Rng::derive(7, "sharing"));
  CHECK(base == first(Rng::derive(7, "sharing")));
  CHECK(base != first(Rng::derive(7, "features")));
  CHECK(base != first(Rng::derive(8, "sharing")));
  CHECK(first(Rng::derive(7, "sharing", 1)) != first(Rng::derive(7, "sharing", 2)));
  CHECK(first(Rng::derive(7, "x", 1, 2)) != first(Rng::derive(7, "x", 2, 1)));
}

TEST_CASE("uniform and below stay in range") {
  Rng r(1);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    const auto k = r.below(7);
    CHECK(k < 7);
  }
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(r.below(1) == 0);
}

TEST_CASE("normal moments") {
  Rng r(2);
  const int n = 50000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal(3.0, 2.0);
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean - 3.0) < 4 * 2.0 / std::sqrt(n));
  CHECK(var == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("poisson mean and variance") {
  Rng r(3);
  for (double lambda : {0.0, 0.7, 4.0, 75.0}) {
    const int n = 20000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<double>(r.poisson(lambda));
      CHECK(k >= 0);
      s += k;
      s2 += k * k;
    }
    const double mean = s / n;
    if (lambda == 0.0) {
      CHECK(mean == 0.0);
      continue;
    }
    CHECK(std::abs(mean - lambda) < 5 * std::sqrt(lambda / n));
    CHECK((s2 / n - mean * mean) == doctest::Approx(lambda).epsilon(0.08));
  }
}

TEST_CASE("sampling without replacement") {
  Rng r(4);
  for (int t = 0; t < 100; ++t) {
    const auto n = 1 + r.below(30);
    const auto k = r.below(n + 1);
    const auto s = r.sample_without_replacement(n, k);
    CHECK(s.size() == k);
    std::set<std::size_t> distinct(s.begin(), s.end());
    CHECK(distinct.size() == k);
    for (auto v : s) CHECK(v < n);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng r(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  r.shuffle(std::span(v));
  std::multiset<int> m(v.begin(), v.end());
  CHECK(m == std::multiset<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}
