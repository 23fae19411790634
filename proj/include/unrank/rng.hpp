#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace unrank {

// Deterministic generator used for every sampling decision in the project.
// splitmix64 keeps sequences identical across platforms and standard
// libraries (std::uniform_int_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, n); n must be nonzero.
  std::uint64_t uniform(std::uint64_t n) {
    std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x;
    do {
      x = next();
    } while (x < reject_below);
    return x % n;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double normal();

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent stream seed from a root seed and a label so that
// each component (split, negatives, forget, mia, ...) can be reproduced in
// isolation.
std::uint64_t stream_seed(std::uint64_t root, std::string_view name);
std::uint64_t stream_seed(std::uint64_t root, std::string_view name, std::uint64_t index);

}  // namespace unrank
