// SPDX-License-Identifier: Apache-2.0
//
// Seeded random streams. All randomness in a run flows from one master seed
// through named substreams so each component can be replayed on its own.

#ifndef SSDVAE_RNG_H_
#define SSDVAE_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace ssdvae {

// Deterministic seed for the substream (master, name, index).
uint64_t derive_seed(uint64_t master, std::string_view name, uint64_t index = 0);

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}
  Rng(uint64_t master, std::string_view stream, uint64_t index = 0)
      : engine_(derive_seed(master, stream, index)) {}

  uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  // Index drawn from unnormalised non-negative weights.
  size_t categorical(std::span<const double> weights);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      const auto j = static_cast<decltype(i)>(below(static_cast<uint64_t>(i) + 1));
      std::swap(first[i], first[j]);
    }
  }

  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 engine_;
};

}  // namespace ssdvae

#endif  // SSDVAE_RNG_H_
