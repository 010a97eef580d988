#include "mfcnn/random.hpp"

#include <bit>
#include <cmath>

namespace mfcnn {

namespace {

constexpr int kLayers = 128;
constexpr double kTailStart = 3.442619855899;
constexpr double kLayerArea = 9.91256303526217e-3;

struct ZigguratTables {
  double x[kLayers + 1];
  double ratio[kLayers];

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& tables() {
  static const ZigguratTables t;
  return t;
}

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  return mix(state);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id) {
  return mix(seed ^ mix(id + 0x632BE59BD9B4E019ULL));
}

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed) {
  std::uint64_t st = seed;
  for (auto& w : s_) w = splitmix64(st);
}

std::uint64_t RandomSource::next_u64() {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double RandomSource::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::uniform_open() {
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

bool RandomSource::coin() { return (next_u64() >> 63) != 0; }

double RandomSource::normal_tail(bool negative) {
  double x, y;
  do {
    x = std::log(uniform_open()) / kTailStart;
    y = std::log(uniform_open());
  } while (-2.0 * y < x * x);
  return negative ? x - kTailStart : kTailStart - x;
}

double RandomSource::normal() {
  const auto& t = tables();
  for (;;) {
    const std::uint64_t bits = next_u64();
    // top 53 bits give the signed abscissa, low 7 bits pick the layer
    const double u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
    const int i = static_cast<int>(bits & (kLayers - 1));
    if (std::fabs(u) < t.ratio[i]) return u * t.x[i];
    if (i == 0) return normal_tail(u < 0);
    const double x = u * t.x[i];
    const double f0 = std::exp(-0.5 * (t.x[i] * t.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;
  }
}

void RandomSource::fill_normal(std::span<double> out, double stddev) {
  for (auto& v : out) v = stddev * normal();
}

RandomSource RandomSource::substream(std::uint64_t id) const {
  return RandomSource(derive_seed(seed_, id));
}

}  // namespace mfcnn
