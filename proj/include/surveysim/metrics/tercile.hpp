#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace surveysim::metrics {

enum class Tercile { low, middle, high };

std::string to_string(Tercile t);

inline constexpr double kLowUpper = 33.33;
inline constexpr double kMiddleUpper = 66.66;

/// Low: x <= 33.33, Middle: 33.33 < x <= 66.66, High: x > 66.66.
/// Values outside [0, 100] fall into the nearest end category.
Tercile tercile_of(double value) noexcept;

struct TercileMeans {
    Tercile category = Tercile::low;
    /// Mean of the human values of participants whose *human* answer is in the category.
    std::optional<double> mean_by_truth;
    /// Mean of the human values of participants whose *predicted* answer is in the category.
    std::optional<double> mean_by_prediction;
    std::size_t n_by_truth = 0;
    std::size_t n_by_prediction = 0;
};

/// Both groupings average the ground-truth values; an empty category has no mean.
std::array<TercileMeans, 3> tercile_mean_validation(std::span<const double> ground_truth,
                                                    std::span<const double> predicted);

} // namespace surveysim::metrics
