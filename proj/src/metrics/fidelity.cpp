#include "surveysim/metrics/fidelity.hpp"

#include "surveysim/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace surveysim::metrics {

double tvd_discrete(const DistributionSummary &p, const DistributionSummary &q) {
    if (p.is_binned() != q.is_binned()) {
        throw std::invalid_argument("cannot compare binned and labeled distributions");
    }
    double l1 = 0.0;
    if (p.is_binned()) {
        if (p.edges() != q.edges()) {
            throw std::invalid_argument("binned distributions must share edges");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            l1 += std::abs(p.mass()[i] - q.mass()[i]);
        }
    } else {
        // Union of supports in p-then-q order; absent labels carry zero mass.
        std::unordered_map<std::string, std::size_t> slot;
        std::vector<double> diff;
        auto add = [&](const DistributionSummary &d, double sign) {
            for (std::size_t i = 0; i < d.size(); ++i) {
                auto [it, inserted] = slot.emplace(d.labels()[i], diff.size());
                if (inserted) {
                    diff.push_back(0.0);
                }
                diff[it->second] += sign * d.mass()[i];
            }
        };
        add(p, 1.0);
        add(q, -1.0);
        for (double d : diff) {
            l1 += std::abs(d);
        }
    }
    return std::clamp(0.5 * l1, 0.0, 1.0);
}

double tvd_binned(std::span<const double> ground_truth, std::span<const double> predicted,
                  std::size_t k_bins) {
    if (ground_truth.empty() || predicted.empty()) {
        throw UndefinedMetricError("tvd_binned needs two non-empty samples");
    }
    auto [gt_lo, gt_hi] = std::minmax_element(ground_truth.begin(), ground_truth.end());
    auto [pr_lo, pr_hi] = std::minmax_element(predicted.begin(), predicted.end());
    const double lo = std::min(*gt_lo, *pr_lo);
    const double hi = std::max(*gt_hi, *pr_hi);
    if (!(hi > lo)) {
        return 0.0;
    }
    auto edges = equal_width_edges(lo, hi, k_bins);
    return tvd_discrete(DistributionSummary::histogram(ground_truth, edges),
                        DistributionSummary::histogram(predicted, edges));
}

double weighted_f1(std::span<const std::string> ground_truth, std::span<const std::string> predicted) {
    if (ground_truth.size() != predicted.size()) {
        throw std::invalid_argument("weighted_f1: inputs differ in length");
    }
    if (ground_truth.empty()) {
        throw UndefinedMetricError("weighted_f1 of empty input");
    }
    struct Counts {
        std::size_t support = 0;
        std::size_t predicted = 0;
        std::size_t true_positive = 0;
    };
    std::map<std::string, Counts> classes;
    for (std::size_t i = 0; i < ground_truth.size(); ++i) {
        ++classes[ground_truth[i]].support;
        ++classes[predicted[i]].predicted;
        if (ground_truth[i] == predicted[i]) {
            ++classes[ground_truth[i]].true_positive;
        }
    }
    double total = 0.0;
    for (const auto &[label, c] : classes) {
        if (c.support == 0 || c.true_positive == 0) {
            continue;
        }
        const double precision = static_cast<double>(c.true_positive) / static_cast<double>(c.predicted);
        const double recall = static_cast<double>(c.true_positive) / static_cast<double>(c.support);
        const double f1 = 2.0 * precision * recall / (precision + recall);
        total += f1 * static_cast<double>(c.support);
    }
    return total / static_cast<double>(ground_truth.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: inputs differ in length");
    }
    const std::size_t n = x.size();
    if (n < 2) {
        throw UndefinedMetricError("pearson needs at least two pairs");
    }
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
    };
    if (constant(x) || constant(y)) {
        throw UndefinedMetricError("pearson of a constant series");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedMetricError("pearson of a constant series");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pct_change(double demo_tvd, double survey_tvd) {
    if (demo_tvd == 0.0) {
        throw std::domain_error("pct_change: demo TVD is zero");
    }
    return (survey_tvd - demo_tvd) / demo_tvd * 100.0;
}

} // namespace surveysim::metrics
