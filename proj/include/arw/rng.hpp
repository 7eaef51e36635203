#pragma once

// Deterministic randomness for the whole simulator.
//
// Two kinds of generators are used:
//   * counter streams: stream_word(seed, id, pos) is a pure function, so
//     envelope tapes and walk step sequences can be re-read in any order
//     and are identical across runs, policies and thread schedules;
//   * SplitMix64: a sequential generator for sampling tasks (Poisson
//     initialization, particle selection, order policies).
//
// No std::*_distribution is used anywhere: their output is implementation
// defined, and outputs here must be bit-reproducible.

#include <cmath>
#include <cstdint>

namespace arw::rng {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// One word of a keyed counter stream; pure in (seed, stream, pos).
inline uint64_t stream_word(uint64_t seed, uint64_t stream, uint64_t pos) {
  uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (stream + 0xD1B54A32D192ED03ULL));
  h = mix64(h ^ (pos + 0x8CB92BA72F3D8DD7ULL));
  return h;
}

// Fold an extra field into a derived seed (used for per-trial seeds).
inline uint64_t derive(uint64_t seed, uint64_t field) {
  return mix64(seed ^ (field + 0x9E3779B97F4A7C15ULL));
}

inline double to_unit(uint64_t word) {  // [0, 1), 53 bits
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Map a word to [0, n) by the multiply-high trick. Bias is at most n/2^64,
// irrelevant for the small n (jump directions) this is used with.
inline uint32_t word_below(uint64_t word, uint32_t n) {
  return static_cast<uint32_t>((static_cast<unsigned __int128>(word) * n) >> 64);
}

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() { return mix64(state_ += 0x9E3779B97F4A7C15ULL); }

  double next_unit() { return to_unit(next()); }

  // Unbiased integer in [0, n) via Lemire's multiply-reject.
  uint64_t next_below(uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      const uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next()) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

 private:
  uint64_t state_;
};

// Poisson(mu) by CDF inversion for mu <= 30 (one uniform per draw, exact,
// stream-stable); larger means are split into <=30 chunks and summed, which
// is again exact. Keep this scheme fixed: seeded outputs are part of the
// reproducibility contract.
inline int64_t poisson(SplitMix64& gen, double mu) {
  if (mu > 30.0) {
    const int chunks = static_cast<int>(std::ceil(mu / 30.0));
    int64_t total = 0;
    for (int c = 0; c < chunks; ++c) total += poisson(gen, mu / chunks);
    return total;
  }
  const double u = gen.next_unit();
  double p = std::exp(-mu);
  double cdf = p;
  int64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= mu / static_cast<double>(k);
    cdf += p;
    if (p < 1e-320) break;  // tail mass exhausted by double precision
  }
  return k;
}

}  // namespace arw::rng
