#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace popest {

/// xoshiro256** with splitmix64 seeding. 256 bits of state.
///
/// Every sampler below is written out by hand so that a seed produces the
/// same stream on every platform; the standard <random> distributions are
/// implementation defined and are not used anywhere in the library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent sub-stream labelled by name, e.g. derive(seed, "sharing").
  static Rng derive(std::uint64_t master, std::string_view label);
  static Rng derive(std::uint64_t master, std::string_view label,
                    std::uint64_t index);
  static Rng derive(std::uint64_t master, std::string_view label,
                    std::uint64_t index_a, std::uint64_t index_b);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Poisson by Knuth's product method, split into chunks of mean <= 30.
  std::int64_t poisson(double mean);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  std::array<std::uint64_t, 4> state_{};
};

std::uint64_t splitmix64(std::uint64_t& x);
std::uint64_t hash_label(std::string_view label);
/// Order-sensitive 64-bit mix of (master, index); used for per-repeat and
/// per-tree seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

}  // namespace popest
