#include "unrank/rng.hpp"

#include <cmath>

namespace unrank {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform_real();
  } while (u1 <= 0.0);
  double u2 = uniform_real();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t root, std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL ^ mix(root);
  for (unsigned char c : name) {
    h = (h ^ c) * 1099511628211ULL;  // FNV-1a
  }
  return mix(h);
}

std::uint64_t stream_seed(std::uint64_t root, std::string_view name, std::uint64_t index) {
  return mix(stream_seed(root, name) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

}  // namespace unrank
