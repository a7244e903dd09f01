#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace surveysim::metrics {

/// Probability mass over either ordered labels or contiguous numeric bins.
///
/// Labeled summaries keep the order in which labels were declared (support first,
/// then unseen labels in order of appearance), so reports are stable.
class DistributionSummary {
  public:
    DistributionSummary() = default;

    /// Frequencies of `labels`. Labels from `support` always appear, even with zero mass.
    static DistributionSummary from_labels(std::span<const std::string> labels,
                                           std::vector<std::string> support = {});

    /// Explicit masses; throws std::invalid_argument unless they are >= 0 and sum to 1 +- 1e-9.
    static DistributionSummary from_masses(std::vector<std::string> labels, std::vector<double> mass,
                                           std::size_t n = 0);

    /// Normalised histogram of `samples` over `edges` (edges.size() - 1 bins, the
    /// last bin closed). Samples outside the edges are clamped into the end bins.
    static DistributionSummary histogram(std::span<const double> samples, std::vector<double> edges);

    bool is_binned() const noexcept { return !edges_.empty(); }
    const std::vector<std::string> &labels() const noexcept { return labels_; }
    const std::vector<double> &edges() const noexcept { return edges_; }
    const std::vector<double> &mass() const noexcept { return mass_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return mass_.size(); }

    /// Mass of a label; 0 when the label is not in the support.
    double mass_of(const std::string &label) const;

  private:
    std::vector<std::string> labels_;
    std::vector<double> edges_;
    std::vector<double> mass_;
    std::size_t n_ = 0;
};

/// K equal-width bins spanning [lo, hi]; the last edge is exactly hi.
std::vector<double> equal_width_edges(double lo, double hi, std::size_t k);

/// Bin of x under half-open bins [e_i, e_i+1) with the last bin closed.
std::size_t bin_index(double x, std::span<const double> edges);

} // namespace surveysim::metrics
