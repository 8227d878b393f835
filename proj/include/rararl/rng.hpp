#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace rararl {

// splitmix64 mixer, used to derive independent stream seeds from one master
// seed so that adding draws to one concern never shifts another.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  Init = 1,
  EnvJitter = 2,
  Action = 3,
  PerturberAction = 4,
  Mask = 5,
  HeadChoice = 6,
  Batch = 7,
  Eval = 8,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  return splitmix64(splitmix64(master) ^ splitmix64(~tag));
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream s) {
  return derive_seed(master, static_cast<std::uint64_t>(s));
}

// Deterministic draws on top of mt19937_64. Distribution helpers are written
// out by hand instead of using std::*_distribution so the sequences do not
// depend on the standard library implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1) with 53-bit resolution
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // unbiased integer in [0, n) by rejection
  std::size_t uniform_below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = (max % span + 1) % span;
    const std::uint64_t bound = max - rem;
    std::uint64_t draw;
    do {
      draw = next_u64();
    } while (draw > bound);
    return static_cast<std::size_t>(draw % span);
  }

  // Knuth multiplication method. rate == 0 returns 0 and consumes no draws.
  int poisson(double rate) {
    if (!(rate >= 0.0)) throw std::invalid_argument("poisson: rate must be >= 0");
    if (rate == 0.0) return 0;
    const double limit = std::exp(-rate);
    int count = 0;
    double product = uniform01();
    while (product > limit) {
      ++count;
      product *= uniform01();
    }
    return count;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace rararl
