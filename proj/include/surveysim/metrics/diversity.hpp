#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>

namespace surveysim::metrics {

/// Natural log by default; see README for why the 7-point maximum is ln 7.
enum class LogBase { natural, base2 };

LogBase log_base_from_string(const std::string &name);

/// H = -sum p_v log p_v over observed proportions (0 log 0 = 0).
double item_entropy(std::span<const std::string> answers, LogBase base = LogBase::natural);
/// Same, treating each distinct value as a category. NaN entries are skipped.
double item_entropy(std::span<const double> answers, LogBase base = LogBase::natural);

/// Mean item entropy over the columns of an agents x items matrix.
double scale_entropy(const Eigen::MatrixXd &responses, LogBase base = LogBase::natural);

struct DiversityResult {
    std::size_t unique_profiles = 0;
    std::size_t total = 0;
    double ratio = 0.0;          ///< unique / total
    double top10_coverage = 0.0; ///< share of agents in the 10 most frequent rows
};

/// Counts distinct response vectors (rows). Throws std::invalid_argument on zero rows.
DiversityResult profile_diversity(const Eigen::MatrixXd &responses);

} // namespace surveysim::metrics
