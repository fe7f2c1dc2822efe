#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace pqadv {

// Self-contained xoshiro256++ generator. std::<random> distributions are
// implementation-defined, so everything that must reproduce across toolchains
// (datasets, init, shuffles, t-SNE starts) goes through this class instead.
//
// All experiment randomness derives from one user seed via named streams
// (`stream`) and order-independent child generators (`split`), so components
// can be re-run in isolation and parallel loops stay schedule-independent.
class Rng {
public:
  explicit Rng(uint64_t seed) : base_(seed) {
    uint64_t x = seed;
    for (auto& w : state_) w = splitmix64(x);
  }

  static Rng stream(uint64_t seed, std::string_view name) {
    return Rng(mix(seed, fnv1a(name)));
  }

  /// Child generator identified by index; independent of draw position.
  Rng split(uint64_t index) const { return Rng(mix(base_, 0x9e3779b97f4a7c15ull + index)); }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; caches the paired draw.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n). Rejection-free multiply-shift is fine here;
  /// bias at 64-bit range is far below anything observable.
  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  int range_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi_inclusive - lo + 1)));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ull;
    }
    return h;
  }

private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    // one splitmix round to decorrelate nearby (seed, index) pairs
    return splitmix64(x);
  }

  std::array<uint64_t, 4> state_{};
  uint64_t base_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pqadv
