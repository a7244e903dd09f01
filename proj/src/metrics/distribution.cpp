#include "surveysim/metrics/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace surveysim::metrics {

DistributionSummary DistributionSummary::from_labels(std::span<const std::string> labels,
                                                     std::vector<std::string> support) {
    DistributionSummary d;
    std::unordered_map<std::string, std::size_t> index;
    for (auto &label : support) {
        if (index.emplace(label, d.labels_.size()).second) {
            d.labels_.push_back(std::move(label));
        }
    }
    std::vector<std::size_t> counts(d.labels_.size(), 0);
    for (const auto &label : labels) {
        auto [it, inserted] = index.emplace(label, d.labels_.size());
        if (inserted) {
            d.labels_.push_back(label);
            counts.push_back(0);
        }
        ++counts[it->second];
    }
    d.n_ = labels.size();
    d.mass_.resize(counts.size(), 0.0);
    if (d.n_ > 0) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            d.mass_[i] = static_cast<double>(counts[i]) / static_cast<double>(d.n_);
        }
    }
    return d;
}

DistributionSummary DistributionSummary::from_masses(std::vector<std::string> labels,
                                                     std::vector<double> mass, std::size_t n) {
    if (labels.size() != mass.size()) {
        throw std::invalid_argument("labels and masses differ in length");
    }
    double total = 0.0;
    for (double m : mass) {
        if (!(m >= 0.0)) {
            throw std::invalid_argument("negative or NaN mass");
        }
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("masses must sum to 1");
    }
    DistributionSummary d;
    d.labels_ = std::move(labels);
    d.mass_ = std::move(mass);
    d.n_ = n;
    return d;
}

DistributionSummary DistributionSummary::histogram(std::span<const double> samples,
                                                   std::vector<double> edges) {
    if (edges.size() < 2) {
        throw std::invalid_argument("histogram needs at least one bin");
    }
    DistributionSummary d;
    d.edges_ = std::move(edges);
    std::vector<std::size_t> counts(d.edges_.size() - 1, 0);
    for (double x : samples) {
        ++counts[bin_index(x, d.edges_)];
    }
    d.n_ = samples.size();
    d.mass_.assign(counts.size(), 0.0);
    if (d.n_ > 0) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            d.mass_[i] = static_cast<double>(counts[i]) / static_cast<double>(d.n_);
        }
    }
    return d;
}

double DistributionSummary::mass_of(const std::string &label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == label) {
            return mass_[i];
        }
    }
    return 0.0;
}

std::vector<double> equal_width_edges(double lo, double hi, std::size_t k) {
    if (k == 0) {
        throw std::invalid_argument("need at least one bin");
    }
    std::vector<double> edges(k + 1);
    const double width = (hi - lo) / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
        edges[i] = lo + static_cast<double>(i) * width;
    }
    edges[k] = hi;
    return edges;
}

std::size_t bin_index(double x, std::span<const double> edges) {
    const std::size_t k = edges.size() - 1;
    const double lo = edges.front();
    const double hi = edges.back();
    if (!(x > lo)) {
        return 0;
    }
    if (x >= hi) {
        return k - 1;
    }
    const double width = (hi - lo) / static_cast<double>(k);
    auto idx = static_cast<std::size_t>(std::clamp(std::floor((x - lo) / width), 0.0,
                                                    static_cast<double>(k - 1)));
    // The division can land one bin off near an edge; settle against the stored edges.
    while (idx > 0 && x < edges[idx]) {
        --idx;
    }
    while (idx + 1 < k && x >= edges[idx + 1]) {
        ++idx;
    }
    return idx;
}

} // namespace surveysim::metrics
