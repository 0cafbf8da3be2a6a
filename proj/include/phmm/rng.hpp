#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace phmm {

/// Deterministic random stream keyed by (seed, stream id).
///
/// The generator is xoshiro256** seeded through splitmix64, so the raw
/// integer and uniform sequences are reproducible bit-for-bit across
/// platforms. Gamma/normal draws go through libm (log, cos, pow) and are
/// reproducible for a given libm build. Distinct stream ids give
/// statistically independent streams; workers must each own their own id.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {
    uint64_t z = seed ^ (0x9E3779B97F4A7C15ull * (stream + 0x632BE59BD9B4E019ull));
    for (auto& w : s_) w = splitmix64(z);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

  /// Derived stream, deterministic in (seed, stream, i).
  RngStream substream(uint64_t i) const {
    uint64_t z = seed_ ^ (0x9E3779B97F4A7C15ull * (stream_ + 1));
    return RngStream(splitmix64(z), i);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1), both endpoints excluded.
  double uniform_open() { return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<int>((static_cast<__uint128_t>(next_u64()) * static_cast<unsigned>(n)) >> 64);
  }

  double normal() {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Gamma(shape, scale 1) via Marsaglia-Tsang; strictly positive output.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      double g = gamma(shape + 1.0);
      double u = uniform_open();
      return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = uniform_open();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Dirichlet draw written into out; out.size() == alphas.size().
  void dirichlet(std::span<const double> alphas, std::span<double> out) {
    if (alphas.size() != out.size()) throw std::invalid_argument("dirichlet: size mismatch");
    double total = 0.0;
    for (size_t i = 0; i < alphas.size(); ++i) {
      out[i] = gamma(alphas[i]);
      total += out[i];
    }
    for (auto& v : out) v /= total;
  }

  /// Index draw proportional to non-negative weights; throws if all zero.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::domain_error("categorical: weights sum to zero");
    double u = uniform() * total;
    double acc = 0.0;
    for (size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static uint64_t splitmix64(uint64_t& z) {
    z += 0x9E3779B97F4A7C15ull;
    uint64_t x = z;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t s_[4];
};

}  // namespace phmm
