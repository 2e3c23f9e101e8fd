#pragma once

#include <cstdint>
#include <span>

namespace fca {

// SplitMix64; used to expand a user seed into xoshiro state.
std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256** 1.0 (Blackman & Vigna). Output depends only on the seed,
// never on the platform or standard library.
class Xoshiro256 {
public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  // Uniform integer in [0, bound), bound > 0. Lemire's multiply-shift with
  // rejection, so the result is unbiased.
  std::uint64_t bounded(std::uint64_t bound);

  // Uniform double in [0, 1) from the top 53 bits.
  double uniform();

private:
  std::uint64_t s_[4];
};

// Partial Fisher-Yates: afterwards items[0..k) is a uniform sample without
// replacement. Position i swaps with i + bounded(n - i).
template <typename T>
void partial_shuffle(std::span<T> items, std::size_t k, Xoshiro256& rng) {
  const std::size_t n = items.size();
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    auto j = i + static_cast<std::size_t>(rng.bounded(n - i));
    if (j != i) std::swap(items[i], items[j]);
  }
}

}  // namespace fca
