#include "surveysim/metrics/diversity.hpp"

#include "surveysim/common/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace surveysim::metrics {

namespace {

template <typename Map> double entropy_of_counts(const Map &counts, std::size_t n, LogBase base) {
    if (n == 0) {
        throw std::invalid_argument("entropy of empty sample");
    }
    double h = 0.0;
    for (const auto &[value, count] : counts) {
        if (count == 0) {
            continue;
        }
        const double p = static_cast<double>(count) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    if (base == LogBase::base2) {
        h /= std::log(2.0);
    }
    // -0.0 for degenerate samples reads badly in reports.
    return h == 0.0 ? 0.0 : h;
}

} // namespace

LogBase log_base_from_string(const std::string &name) {
    if (name == "natural" || name == "e" || name == "ln") {
        return LogBase::natural;
    }
    if (name == "base2" || name == "2" || name == "log2") {
        return LogBase::base2;
    }
    throw ConfigurationError("unknown entropy base '" + name + "'");
}

double item_entropy(std::span<const std::string> answers, LogBase base) {
    std::map<std::string, std::size_t> counts;
    for (const auto &a : answers) {
        ++counts[a];
    }
    return entropy_of_counts(counts, answers.size(), base);
}

double item_entropy(std::span<const double> answers, LogBase base) {
    std::map<double, std::size_t> counts;
    std::size_t n = 0;
    for (double a : answers) {
        if (std::isnan(a)) {
            continue;
        }
        ++counts[a];
        ++n;
    }
    return entropy_of_counts(counts, n, base);
}

double scale_entropy(const Eigen::MatrixXd &responses, LogBase base) {
    if (responses.cols() == 0) {
        throw std::invalid_argument("scale_entropy needs at least one item");
    }
    double total = 0.0;
    for (Eigen::Index c = 0; c < responses.cols(); ++c) {
        std::vector<double> column(responses.rows());
        Eigen::Map<Eigen::VectorXd>(column.data(), responses.rows()) = responses.col(c);
        total += item_entropy(std::span<const double>{column}, base);
    }
    return total / static_cast<double>(responses.cols());
}

DiversityResult profile_diversity(const Eigen::MatrixXd &responses) {
    if (responses.rows() == 0) {
        throw std::invalid_argument("profile_diversity needs at least one agent");
    }
    // NaN has no ordering; fold it onto -inf so incomplete rows still compare.
    std::map<std::vector<double>, std::size_t> counts;
    for (Eigen::Index r = 0; r < responses.rows(); ++r) {
        std::vector<double> row(responses.cols());
        for (Eigen::Index c = 0; c < responses.cols(); ++c) {
            const double v = responses(r, c);
            row[c] = std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
        }
        ++counts[row];
    }
    std::vector<std::size_t> frequencies;
    frequencies.reserve(counts.size());
    for (const auto &[row, count] : counts) {
        frequencies.push_back(count);
    }
    std::sort(frequencies.begin(), frequencies.end(), std::greater<>{});
    std::size_t top = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(10, frequencies.size()); ++i) {
        top += frequencies[i];
    }

    DiversityResult result;
    result.total = static_cast<std::size_t>(responses.rows());
    result.unique_profiles = counts.size();
    result.ratio = static_cast<double>(result.unique_profiles) / static_cast<double>(result.total);
    result.top10_coverage = static_cast<double>(top) / static_cast<double>(result.total);
    return result;
}

} // namespace surveysim::metrics
