#include "surveysim/metrics/reliability.hpp"

#include "surveysim/common/errors.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace surveysim::metrics {

IccResult icc1(std::span<const double> scores, std::span<const std::string> strata) {
    if (scores.size() != strata.size()) {
        throw std::invalid_argument("icc1: scores and strata differ in length");
    }
    struct Group {
        double sum = 0.0;
        std::size_t n = 0;
    };
    std::map<std::string, Group> groups;
    double grand_sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto &g = groups[strata[i]];
        g.sum += scores[i];
        ++g.n;
        grand_sum += scores[i];
    }
    if (groups.size() < 2) {
        throw GroupingError("icc1 needs at least two groups");
    }
    for (const auto &[label, g] : groups) {
        if (g.n < 2) {
            throw GroupingError("group '" + label + "' has fewer than two members");
        }
    }

    const auto n_total = static_cast<double>(scores.size());
    const auto k = static_cast<double>(groups.size());
    const double grand_mean = grand_sum / n_total;

    double ss_between = 0.0;
    double sum_sq_sizes = 0.0;
    for (const auto &[label, g] : groups) {
        const double mean = g.sum / static_cast<double>(g.n);
        ss_between += static_cast<double>(g.n) * (mean - grand_mean) * (mean - grand_mean);
        sum_sq_sizes += static_cast<double>(g.n) * static_cast<double>(g.n);
    }
    double ss_within = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto &g = groups[strata[i]];
        const double d = scores[i] - g.sum / static_cast<double>(g.n);
        ss_within += d * d;
    }

    IccResult result;
    result.n_groups = groups.size();
    result.ms_between = ss_between / (k - 1.0);
    result.ms_within = ss_within / (n_total - k);
    result.avg_group_size = (n_total - sum_sq_sizes / n_total) / (k - 1.0);
    const double denom = result.ms_between + (result.avg_group_size - 1.0) * result.ms_within;
    if (denom == 0.0) {
        throw UndefinedMetricError("icc1: all scores identical");
    }
    result.icc = (result.ms_between - result.ms_within) / denom;
    return result;
}

double standardized_alpha(std::size_t k, double mean_r) {
    const auto kd = static_cast<double>(k);
    return kd * mean_r / (1.0 + (kd - 1.0) * mean_r);
}

AlphaDecomposition cronbach(const Eigen::MatrixXd &items, std::span<const std::string> item_names) {
    const auto k = static_cast<std::size_t>(items.cols());
    if (k < 2) {
        throw std::invalid_argument("cronbach needs at least two items");
    }
    if (!item_names.empty() && item_names.size() != k) {
        throw std::invalid_argument("cronbach: one name per item expected");
    }

    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < items.rows(); ++r) {
        if (!items.row(r).array().isNaN().any()) {
            keep.push_back(r);
        }
    }
    if (keep.size() < 2) {
        throw std::invalid_argument("cronbach needs at least two complete rows");
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(keep.size()), items.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = items.row(keep[i]);
    }
    const double n = static_cast<double>(x.rows());

    auto name_of = [&](std::size_t j) {
        return item_names.empty() ? "item" + std::to_string(j + 1) : item_names[j];
    };

    const Eigen::RowVectorXd means = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - means;
    const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1.0);

    for (std::size_t j = 0; j < k; ++j) {
        const auto col = x.col(static_cast<Eigen::Index>(j));
        if ((col.array() == col(0)).all()) {
            throw CorrelationUndefinedError(name_of(j));
        }
    }

    double sum_item_var = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        sum_item_var += cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    }
    double sum_r = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const auto a = static_cast<Eigen::Index>(i);
            const auto b = static_cast<Eigen::Index>(j);
            sum_r += cov(a, b) / std::sqrt(cov(a, a) * cov(b, b));
        }
    }

    const Eigen::VectorXd totals = x.rowwise().sum();
    const double total_var = (totals.array() - totals.mean()).square().sum() / (n - 1.0);
    const Eigen::VectorXd row_means = totals / static_cast<double>(k);
    const double kd = static_cast<double>(k);

    AlphaDecomposition out;
    out.k = k;
    out.n = keep.size();
    out.dropped = static_cast<std::size_t>(items.rows()) - keep.size();
    out.alpha_raw = kd / (kd - 1.0) * (1.0 - sum_item_var / total_var);
    out.mean_inter_item_r = sum_r / (kd * (kd - 1.0) / 2.0);
    out.alpha_std = standardized_alpha(k, out.mean_inter_item_r);
    out.mean_item_variance = sum_item_var / kd;
    out.scale_variance = (row_means.array() - row_means.mean()).square().sum() / (n - 1.0);
    return out;
}

} // namespace surveysim::metrics
