#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "clfa/errors.hpp"

namespace clfa {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stable sub-stream seed for (replicate, chain, ...) ids hanging off one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t id : ids) h = splitmix64(h ^ (id + 0x9e3779b97f4a7c15ULL));
  return h;
}

/// Random generator with explicitly coded variate transforms.
///
/// The engine (std::mt19937_64) is fully pinned by the standard, and the
/// transforms below avoid the implementation-defined std:: distributions, so a
/// seed reproduces the same stream on any conforming toolchain (up to libm
/// rounding in exp/log/sqrt/cos).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  /// Standard normal (Box-Muller, pairs cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  /// Gamma(shape, scale) via Marsaglia-Tsang squeeze.
  double gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) throw UsageError("gamma: shape and scale must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0, 1.0);
      return scale * g * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
  }

  /// ~ InvGamma(shape, rate): density rate^shape/Gamma(shape) x^{-shape-1} exp(-rate/x).
  double inverse_gamma(double shape, double rate) { return 1.0 / gamma(shape, 1.0 / rate); }

  /// Uniform integer in {0, ..., n-1}, rejection-corrected.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw UsageError("uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Index drawn with probability proportional to weights[i] (>= 0, not all zero).
  std::size_t discrete(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw UsageError("discrete: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw UsageError("discrete: weights sum to zero");
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  /// m distinct values from {items}, partial Fisher-Yates order.
  template <typename T>
  std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t m) {
    if (m > items.size()) throw UsageError("sample_without_replacement: m exceeds pool size");
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_int(items.size() - i));
      std::swap(items[i], items[j]);
    }
    items.resize(m);
    return items;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace clfa
