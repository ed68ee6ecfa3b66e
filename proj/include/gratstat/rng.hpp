// Deterministic keyed RNG substreams.
//
// Every random draw in the pipeline flows from (master seed, tag, indices)
// through SplitMix64 mixing, so any sample/stage/angle owns a collision-free
// stream that is independent of scheduling order and worker count.
// Gaussian variates use an explicit Box-Muller so sequences are identical
// across standard libraries and platforms.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gratstat {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Order-sensitive combination of key material into one 64-bit state.
inline std::uint64_t mix_key(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

class Substream {
public:
  Substream(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
            std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(seed);
    for (char ch : tag) h = mix_key(h, static_cast<std::uint64_t>(static_cast<unsigned char>(ch)));
    h = mix_key(h, a);
    h = mix_key(h, b);
    h = mix_key(h, c);
    state_ = h;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  // U(0,1], 53-bit mantissa; never 0 so log() below is safe.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
  }

  // U[-1,1], used by the multiplicative measurement-noise model.
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  // N(0,1) via Box-Muller; the pair partner is cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace gratstat
