#include "surveysim/metrics/tercile.hpp"

#include <stdexcept>

namespace surveysim::metrics {

std::string to_string(Tercile t) {
    switch (t) {
    case Tercile::low:
        return "Low";
    case Tercile::middle:
        return "Middle";
    case Tercile::high:
        return "High";
    }
    return "Low";
}

Tercile tercile_of(double value) noexcept {
    if (value <= kLowUpper) {
        return Tercile::low;
    }
    if (value <= kMiddleUpper) {
        return Tercile::middle;
    }
    return Tercile::high;
}

std::array<TercileMeans, 3> tercile_mean_validation(std::span<const double> ground_truth,
                                                    std::span<const double> predicted) {
    if (ground_truth.size() != predicted.size()) {
        throw std::invalid_argument("tercile_mean_validation: inputs differ in length");
    }
    std::array<double, 3> sum_truth{}, sum_pred{};
    std::array<TercileMeans, 3> out{};
    for (std::size_t c = 0; c < 3; ++c) {
        out[c].category = static_cast<Tercile>(c);
    }
    for (std::size_t i = 0; i < ground_truth.size(); ++i) {
        const auto by_truth = static_cast<std::size_t>(tercile_of(ground_truth[i]));
        const auto by_pred = static_cast<std::size_t>(tercile_of(predicted[i]));
        sum_truth[by_truth] += ground_truth[i];
        ++out[by_truth].n_by_truth;
        sum_pred[by_pred] += ground_truth[i];
        ++out[by_pred].n_by_prediction;
    }
    for (std::size_t c = 0; c < 3; ++c) {
        if (out[c].n_by_truth > 0) {
            out[c].mean_by_truth = sum_truth[c] / static_cast<double>(out[c].n_by_truth);
        }
        if (out[c].n_by_prediction > 0) {
            out[c].mean_by_prediction = sum_pred[c] / static_cast<double>(out[c].n_by_prediction);
        }
    }
    return out;
}

} // namespace surveysim::metrics
