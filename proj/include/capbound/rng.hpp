#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace capbound {

// Deterministic pseudorandom stream: xoshiro256++ with splitmix64 state
// expansion. The seed-to-stream mapping is fixed by this file (see
// docs/rng.md) so any implementation of the same two algorithms reproduces
// the exact sequences. No std::random machinery is used anywhere because the
// standard distributions are not bit-portable across library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; draws two uniforms per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  // Beta(a, b) for small integer shapes: the a-th smallest of a+b-1 uniforms.
  double beta_int(int a, int b) {
    const int k = a + b - 1;
    double kth = 0.0;
    // Selection by repeated max-removal is fine for the tiny k used here.
    std::array<double, 16> u{};
    for (int i = 0; i < k; ++i) u[static_cast<std::size_t>(i)] = uniform();
    for (int i = 0; i < a; ++i) {
      int arg = i;
      for (int j = i + 1; j < k; ++j)
        if (u[static_cast<std::size_t>(j)] < u[static_cast<std::size_t>(arg)]) arg = j;
      std::swap(u[static_cast<std::size_t>(i)], u[static_cast<std::size_t>(arg)]);
      kth = u[static_cast<std::size_t>(i)];
    }
    return kth;
  }

  // Unbiased-enough index draw for shuffles (multiply-shift; n << 2^32).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace capbound
