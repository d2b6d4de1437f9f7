#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace vidcomp {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a base seed and labels, so that
/// per-item randomness does not depend on processing order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> labels);

/// mt19937_64 with portable draws; std distributions differ across standard
/// libraries and would break byte-identical outputs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n); n > 0.
  std::size_t index(std::size_t n);

  /// Uniform in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller.
  double normal();

  bool coin() { return (next() >> 63) != 0; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace vidcomp
