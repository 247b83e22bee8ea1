#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace humorfuse {

// SplitMix64 generator. The exact output sequence is part of the persisted
// fold-plan format, so nothing here may depend on std:: distributions.
class SplitMix64 {
 public:
  static constexpr std::string_view kName = "splitmix64/fisher-yates-rejection/v1";

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;

  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound) noexcept;

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() noexcept;

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Child stream seeds. Splitting by label keeps per-dataset and per-job streams
// independent of iteration order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace humorfuse
