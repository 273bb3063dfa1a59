#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "apcd/errors.hpp"

namespace apcd {

namespace detail {
// SplitMix64 finalizer (public-domain constants from Steele/Lea/Vigna).
inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Deterministic per-chain random stream (SplitMix64). The whole state is a
/// single 64-bit word, which keeps checkpoint blobs small and makes the
/// serial and OpenMP execution paths bit-identical by construction.
class RandomStream {
 public:
  static constexpr const char* kAlgorithmTag = "splitmix64";

  RandomStream() : state_(0) {}
  explicit RandomStream(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return detail::mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cosine branch only, so the stream
  /// carries no cached half-sample and serializes as plain state).
  double next_normal() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  /// Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny compared to 2^64.
    return next_u64() % n;
  }

  uint64_t state() const { return state_; }

  std::string state_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 0; k < 16; ++k) out[15 - k] = digits[(state_ >> (4 * k)) & 0xF];
    return out;
  }

  static RandomStream from_hex(const std::string& hex) {
    if (hex.size() != 16) throw invalid_input_error("rng state blob must be 16 hex digits");
    uint64_t s = 0;
    for (char c : hex) {
      uint64_t d;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (c >= 'a' && c <= 'f') d = 10 + (c - 'a');
      else throw invalid_input_error("bad hex digit in rng state blob");
      s = (s << 4) | d;
    }
    return RandomStream(s);
  }

 private:
  uint64_t state_;
};

/// Roles keep streams for different purposes disjoint even when their
/// (n, m) indices collide.
enum class StreamRole : uint64_t {
  e_chain = 1,
  m_chain = 2,
  ais_free = 3,
  ais_clamped = 4,
  data_gen = 5,
  model_gen = 6,
  hidden_select = 7,
  chain_init = 8,
};

/// Splitting function: the stream seed is a pure function of
/// (master seed, role, n, m), mixed through SplitMix64 finalizers.
inline uint64_t derive_stream_seed(uint64_t master, StreamRole role, uint64_t n = 0,
                                   uint64_t m = 0) {
  uint64_t z = detail::mix64(master ^ 0xA0761D6478BD642Full);
  z = detail::mix64(z ^ (static_cast<uint64_t>(role) * 0xE7037ED1A0B428DBull));
  z = detail::mix64(z ^ (n * 0x8EBC6AF09C88C6E3ull));
  z = detail::mix64(z ^ (m * 0x589965CC75374CC3ull));
  return z;
}

}  // namespace apcd
