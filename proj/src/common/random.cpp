#include "surveysim/common/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace surveysim {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SeedSequence &SeedSequence::mix(std::uint64_t value) noexcept {
    state_ = splitmix64(state_ ^ splitmix64(value + 0x632be59bd9b4e019ULL));
    return *this;
}

SeedSequence &SeedSequence::mix(std::string_view text) noexcept {
    // FNV-1a, then folded through mix() so strings and integers share one stream.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix(h ^ text.size());
}

double uniform01(Rng &rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_index(Rng &rng, std::uint64_t n) noexcept {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t draw = 0;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % n;
}

double uniform_real(Rng &rng, double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01(rng);
}

double standard_normal(Rng &rng) noexcept {
    double u1 = 0.0;
    do {
        u1 = uniform01(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t weighted_index(Rng &rng, std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (weights.empty() || !(total > 0.0)) {
        throw std::invalid_argument("weighted_index: weights must have positive sum");
    }
    const double target = uniform01(rng) * total;
    double running = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        running += weights[i];
        if (target < running) {
            return i;
        }
    }
    // Floating-point slack: return the last index with positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) {
            return i;
        }
    }
    return weights.size() - 1;
}

} // namespace surveysim
