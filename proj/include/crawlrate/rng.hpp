#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace crawlrate {

// Name echoed into every output file so a run can be replayed elsewhere.
// mt19937_64 is bit-exact across standard libraries; the distributions below
// are written out by hand because std::*_distribution is not.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-seeding/inverse-cdf-exponential";

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of the `stream`-th independent substream of `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(~stream));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exp(rate) by inversion; strictly positive.
  double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

  bool bernoulli(double probability) noexcept { return uniform() < probability; }

 private:
  std::mt19937_64 engine_;
};

// Next arrival after `now` for a Poisson stream of the given rate. Resamples
// the (vanishingly rare) gap that rounds away so arrivals stay strictly increasing.
inline double next_arrival(double now, double rate, Rng& rng) noexcept {
  for (;;) {
    const double t = now + rng.exponential(rate);
    if (t > now) return t;
  }
}

}  // namespace crawlrate
