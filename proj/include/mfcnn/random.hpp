#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace mfcnn {

// xoshiro256** seeded through SplitMix64; normals by a 128-layer ziggurat.
// Every bit of output is a function of the seed only, so streams are
// reproducible across platforms.
class RandomSource {
 public:
  static constexpr std::string_view kAlgorithm = "xoshiro256ss-splitmix64-zig128";

  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // uniform on [0, 1) with 53 random bits
  double uniform();
  // uniform on (0, 1)
  double uniform_open();
  double normal();
  bool coin();

  void fill_normal(std::span<double> out, double stddev = 1.0);

  // Independent stream keyed by (seed, id); does not advance this source.
  RandomSource substream(std::uint64_t id) const;

 private:
  double normal_tail(bool negative);

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id);

}  // namespace mfcnn
