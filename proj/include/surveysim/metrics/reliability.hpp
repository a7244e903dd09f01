#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace surveysim::metrics {

struct IccResult {
    double icc = 0.0;
    double ms_between = 0.0;
    double ms_within = 0.0;
    std::size_t n_groups = 0;
    /// Effective group size n0 = (N - sum n_g^2 / N) / (k - 1); equals the common
    /// group size when groups are balanced.
    double avg_group_size = 0.0;
};

/// One-way random-effects ICC(1) of `scores` grouped by `strata`:
/// (MSB - MSW) / (MSB + (n0 - 1) MSW).
/// Throws GroupingError for fewer than two groups or any group with fewer than two
/// members, UndefinedMetricError when all scores are identical.
IccResult icc1(std::span<const double> scores, std::span<const std::string> strata);

struct AlphaDecomposition {
    double alpha_raw = 0.0;
    double alpha_std = 0.0;
    double mean_inter_item_r = 0.0;
    double mean_item_variance = 0.0;
    double scale_variance = 0.0; ///< variance of agent-level mean scores
    std::size_t k = 0;
    std::size_t n = 0;       ///< complete rows used
    std::size_t dropped = 0; ///< rows removed by listwise deletion
};

/// k r / (1 + (k - 1) r).
double standardized_alpha(std::size_t k, double mean_r);

/// Cronbach's alpha (raw, from item and total-score variances) and its standardized
/// form from the mean inter-item correlation. Rows containing NaN are dropped
/// listwise. Sample variances (n - 1) throughout.
/// Throws CorrelationUndefinedError naming a constant item (names default to "item<i>").
AlphaDecomposition cronbach(const Eigen::MatrixXd &items, std::span<const std::string> item_names = {});

} // namespace surveysim::metrics
