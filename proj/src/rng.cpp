#include "fairclust/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fairclust {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t hash_name(std::string_view s) {
  // FNV-1a, then mixed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace

// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(mix64(seed)) {}

Rng Rng::substream(std::string_view purpose) const {
  return Rng(mix64(key_ ^ hash_name(purpose)), 0, 0);
}

Rng Rng::substream(std::uint64_t index) const {
  return Rng(mix64(key_ + mix64(index ^ 0x5851F42D4C957F2DULL)), 0, 0);
}

Rng::result_type Rng::operator()() {
  const std::uint64_t c = counter_++;
  return mix64(key_ ^ mix64(c * kGolden));
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = max() - (max() % n);
  std::uint64_t x = (*this)();
  while (x >= limit) x = (*this)();
  return x % n;
}

}  // namespace fairclust
