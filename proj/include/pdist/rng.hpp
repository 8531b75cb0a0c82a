#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace pdist {

// splitmix64 finalizer; used to derive independent stream seeds so that
// per-trial streams never overlap the base stream.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 1));
}

// Deterministic random source. mt19937_64's output sequence is fixed by the
// standard and all mappings below avoid the implementation-defined standard
// distributions, so identical seeds give identical results on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform in [0, n)
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % static_cast<std::uint64_t>(n));
    std::uint64_t x;
    do { x = eng_(); } while (x >= limit);
    return static_cast<int>(x % static_cast<std::uint64_t>(n));
  }

  // index sampled proportionally to the (nonnegative) weights
  int sample(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) throw std::invalid_argument("Rng::sample: weights sum to zero");
    double x = uniform() * total;
    double acc = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (x < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do { u1 = uniform(); } while (u1 <= 0.0);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pdist
