#pragma once

#include <cstdint>
#include <cmath>

namespace zonesim::rng {

// SplitMix64 finalizer. Good avalanche, cheap, and portable: the whole
// simulator derives every random draw from hashed (seed, purpose, agent,
// iteration) keys so results do not depend on evaluation order or thread
// count.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

// Stream roles. Keeping them disjoint means e.g. the perturbation draws of
// iteration r are identical whether or not anything else consumed noise
// earlier in the round.
enum class Purpose : std::uint64_t {
  kInit = 1,          // initial iterates
  kPerturbation = 2,  // Gaussian directions of the gradient estimator
  kNoise = 3,         // additive oracle noise
  kPick = 4,          // agent sampling (star network, stochastic baselines)
  kOutput = 5,        // uniform output-iterate index
  kGeometry = 6,      // node positions of geometric graphs
  kCoefficients = 7,  // problem-instance coefficients
};

inline std::uint64_t key(std::uint64_t seed, Purpose p, std::uint64_t a = 0,
                         std::uint64_t b = 0) {
  std::uint64_t h = mix64(seed);
  h = combine(h, static_cast<std::uint64_t>(p));
  h = combine(h, a);
  return combine(h, b);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  return combine(mix64(master), trial);
}

// Counter-style generator: a SplitMix64 walk seeded from a key. Draws are
// sequential within a stream; distinct keys give independent streams.
class Stream {
 public:
  explicit Stream(std::uint64_t k) : state_(k) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. The second value of each pair is cached,
  // which is still fully deterministic because streams are never shared.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace zonesim::rng
