// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace graphlog {

// Deterministic xoshiro256++ generator. Every source of randomness in the
// pipeline is an Rng forked from the run seed by a (tag, index) pair, so a
// run can be resumed at any step without replaying generator state.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  uint64_t below(uint64_t n);
  // Uniform integer in [0, n) excluding `excluded`. n must be >= 2.
  uint64_t below_excluding(uint64_t n, uint64_t excluded);
  double normal(double mean, double stddev);

  // k distinct values from [0, n), in random order.
  std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t k);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent substream. Pure function of this generator's
  // seed and the arguments; does not advance this generator.
  Rng fork(std::string_view tag, uint64_t a = 0, uint64_t b = 0) const;

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t s_[4];
};

}  // namespace graphlog
