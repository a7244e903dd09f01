#pragma once

#include "surveysim/corpus/types.hpp"
#include "surveysim/metrics/fidelity.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace surveysim::inference {

/// How unusable answers enter distribution comparisons.
struct MissingHandling {
    /// Categorical items: unparseable predictions form their own category ("Unparseable").
    /// When false they are dropped like absent answers.
    bool keep_unparseable_as_category = true;
};

/// Answers of one question, aligned to the panel's participant list.
/// Absent ground truth excludes the participant from that question. Categorical ground
/// truth keeps "Refusal" and "Don't know" as categories; other missing reasons count as absent.
struct QuestionData {
    std::string code;
    bool numeric = false;
    std::vector<std::optional<corpus::AnswerValue>> truth;
    std::map<std::string, std::vector<std::optional<corpus::AnswerValue>>> predictions; ///< by condition
};

struct Panel {
    std::vector<std::string> participants;
    std::vector<QuestionData> questions;

    /// Throws ValidationError when a vector length disagrees with the participant count.
    void validate() const;
};

struct BootstrapConfig {
    std::size_t iterations = 5000;
    double confidence = 0.95;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::size_t k_bins = metrics::kDefaultTvdBins;
    MissingHandling missing;

    /// Throws ConfigurationError.
    void validate() const;
};

struct BootstrapResult {
    double mean_delta_tvd = 0.0; ///< mean of the bootstrap distribution of delta
    double observed_delta_tvd = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double mean_tvd_a = 0.0; ///< bootstrap mean of the per-question mean TVD
    double mean_tvd_b = 0.0;
    std::map<std::string, double> per_question_delta; ///< bootstrap means
    std::map<std::string, double> per_question_tvd_a;
    std::map<std::string, double> per_question_tvd_b;
    bool significant = false;
    /// Two-sided percentile level: 2 * min(share of deltas <= 0, share >= 0), capped at 1.
    double achieved_p = 1.0;
    std::size_t iterations_used = 0;
    std::size_t participants = 0;
    std::size_t questions = 0;
};

/// TVD of one question's ground truth against one condition over the given participant
/// multiset (indices may repeat). Returns nullopt when either side is empty after exclusions.
std::optional<double> question_tvd(const QuestionData &question, const std::string &condition,
                                   const std::vector<std::size_t> &rows, std::size_t k_bins,
                                   const MissingHandling &missing = {});

/// Resamples participants with replacement; delta = mean over questions of TVD_A - TVD_B.
/// Throws CoverageError naming a question that lacks either condition,
/// InsufficientDataError for fewer than two participants.
BootstrapResult participant_bootstrap(const Panel &panel, const std::string &condition_a,
                                      const std::string &condition_b, const BootstrapConfig &config = {});

/// Linear-interpolation percentile of sorted values, q in [0, 1].
double percentile_sorted(const std::vector<double> &sorted, double q);

} // namespace surveysim::inference
