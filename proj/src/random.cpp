#include "selfpref/random.hpp"

#include <cmath>
#include <numbers>

namespace selfpref {
namespace {

double to_open_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t CounterRng::bits(std::initializer_list<std::uint64_t> counters) const {
  std::uint64_t h = splitmix64(seed_);
  for (std::uint64_t c : counters) h = splitmix64(h ^ splitmix64(c + 0x2545f4914f6cdd1dULL));
  return h;
}

double CounterRng::uniform(std::initializer_list<std::uint64_t> counters) const { return to_open_unit(bits(counters)); }

double CounterRng::normal(std::initializer_list<std::uint64_t> counters) const {
  // Box-Muller on two uniforms derived from the same counter tuple.
  const std::uint64_t h = bits(counters);
  const double u1 = to_open_unit(splitmix64(h ^ 0x1ULL));
  const double u2 = to_open_unit(splitmix64(h ^ 0x2ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool CounterRng::bernoulli(double p, std::initializer_list<std::uint64_t> counters) const {
  return uniform(counters) < p;
}

}  // namespace selfpref
