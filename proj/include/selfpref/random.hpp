#pragma once

#include <cstdint>
#include <initializer_list>

namespace selfpref {

// Counter-based randomness: every draw is a pure function of the seed and a
// tuple of counters, so output does not depend on evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t bits(std::initializer_list<std::uint64_t> counters) const;
  /// Uniform on the open interval (0, 1).
  double uniform(std::initializer_list<std::uint64_t> counters) const;
  double normal(std::initializer_list<std::uint64_t> counters) const;
  bool bernoulli(double p, std::initializer_list<std::uint64_t> counters) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace selfpref
