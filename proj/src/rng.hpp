#pragma once

#include <cstdint>
#include <random>

namespace seqcombine {

// Stream purposes. Keys are part of the reproducibility contract: adding a
// new purpose must not renumber existing ones.
enum class StreamPurpose : std::uint64_t {
  TrialData = 1,
  BoundarySolver = 2,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic key for (seed, trial, purpose, sub) so that streams for
// different trials, purposes and tests never overlap in their seeding.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t trial, StreamPurpose purpose,
                                std::uint64_t sub = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ trial);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return splitmix64(h ^ sub);
}

class Stream {
 public:
  explicit Stream(std::uint64_t key) : engine_(key) {}
  Stream(std::uint64_t seed, std::uint64_t trial, StreamPurpose purpose, std::uint64_t sub = 0)
      : engine_(stream_key(seed, trial, purpose, sub)) {}

  // Uniform on the open interval (0, 1), 53 random bits.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace seqcombine
