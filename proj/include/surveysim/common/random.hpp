#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace surveysim {

/// Engine used everywhere a seed is accepted. mt19937_64 output is fully
/// specified by the standard, so all sampling below is portable bit-for-bit.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a base seed and a sequence of keys.
/// Used to give every task / iteration / tree its own generator so that results
/// do not depend on scheduling order.
class SeedSequence {
  public:
    explicit SeedSequence(std::uint64_t base) noexcept : state_{splitmix64(base)} {}

    SeedSequence &mix(std::uint64_t value) noexcept;
    SeedSequence &mix(std::string_view text) noexcept;

    std::uint64_t value() const noexcept { return splitmix64(state_); }
    Rng engine() const { return Rng{value()}; }

  private:
    std::uint64_t state_;
};

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng &rng) noexcept;

/// Uniform integer in [0, n). n must be > 0.
std::uint64_t uniform_index(Rng &rng, std::uint64_t n) noexcept;

double uniform_real(Rng &rng, double lo, double hi) noexcept;

/// Standard normal via Box-Muller (no cached second value, so each call is self-contained).
double standard_normal(Rng &rng) noexcept;

/// Index drawn with probability proportional to weights (all >= 0, sum > 0).
std::size_t weighted_index(Rng &rng, std::span<const double> weights);

/// Fisher-Yates with uniform_index, portable across standard libraries.
template <typename T> void shuffle(std::span<T> values, Rng &rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(values[i - 1], values[j]);
    }
}

} // namespace surveysim
