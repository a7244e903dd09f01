#pragma once

#include "surveysim/metrics/distribution.hpp"

#include <span>
#include <string>

namespace surveysim::metrics {

inline constexpr std::size_t kDefaultTvdBins = 50;

/// Half the L1 distance between two pmfs. Labeled supports are union-aligned,
/// absent labels counting as zero mass; binned summaries must share edges.
double tvd_discrete(const DistributionSummary &p, const DistributionSummary &q);

/// Histogram TVD over `k_bins` equal-width bins spanning the pooled min..max of
/// both samples. Returns 0 when every value in both samples is identical.
/// Throws UndefinedMetricError on an empty sample.
double tvd_binned(std::span<const double> ground_truth, std::span<const double> predicted,
                  std::size_t k_bins = kDefaultTvdBins);

/// Per-class F1 weighted by ground-truth class support (classes that never occur in
/// the ground truth get weight 0). Throws UndefinedMetricError on empty input.
double weighted_f1(std::span<const std::string> ground_truth, std::span<const std::string> predicted);

/// Sample Pearson correlation. Throws UndefinedMetricError when either series is constant
/// or shorter than 2.
double pearson(std::span<const double> x, std::span<const double> y);

/// (survey - demo) / demo * 100. Throws std::domain_error when demo_tvd == 0.
double pct_change(double demo_tvd, double survey_tvd);

} // namespace surveysim::metrics
