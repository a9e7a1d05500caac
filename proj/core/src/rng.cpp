// SPDX-License-Identifier: Apache-2.0
#include "graphlog/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace graphlog {

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
  uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 high bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
}

uint64_t Rng::below_excluding(uint64_t n, uint64_t excluded) {
  if (n < 2) throw std::invalid_argument("Rng::below_excluding: n must be >= 2");
  uint64_t v = below(n - 1);
  return v >= excluded ? v + 1 : v;
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller; one value per call keeps forked streams stateless.
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

std::vector<uint32_t> Rng::sample_without_replacement(uint32_t n, uint32_t k) {
  if (k > n) throw std::invalid_argument("Rng::sample_without_replacement: k > n");
  std::vector<uint32_t> pool(n);
  for (uint32_t i = 0; i < n; ++i) pool[i] = i;
  // Partial Fisher-Yates: first k entries of the shuffle.
  for (uint32_t i = 0; i < k; ++i) {
    uint32_t j = i + static_cast<uint32_t>(below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

Rng Rng::fork(std::string_view tag, uint64_t a, uint64_t b) const {
  uint64_t x = seed_;
  uint64_t h = splitmix64(x);
  x ^= fnv1a64(tag);
  h ^= splitmix64(x);
  x ^= a * 0x9e3779b97f4a7c15ULL + 0x243f6a8885a308d3ULL;
  h ^= splitmix64(x);
  x ^= b * 0xd1b54a32d192ed03ULL + 0x452821e638d01377ULL;
  h ^= splitmix64(x);
  return Rng(h);
}

}  // namespace graphlog
