#pragma once

#include "surveysim/forest/forest.hpp"
#include "surveysim/inference/bootstrap.hpp"
#include "surveysim/metrics/diversity.hpp"
#include "surveysim/metrics/records.hpp"
#include "surveysim/metrics/reliability.hpp"
#include "surveysim/psychometrics/psychometrics.hpp"
#include "surveysim/study/config.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace surveysim::study {

/// Series name used for the human answers next to the simulated conditions.
inline constexpr const char *kTruthSeries = "ground_truth";
inline constexpr const char *kForestSeries = "random_forest";

/// A configured (question, condition) pair that produced no metric, with the reason.
struct FailureEntry {
    std::string question;
    std::string condition;
    std::string error;
};

struct ConditionDiagnostics {
    std::string condition;
    std::size_t tasks = 0;
    std::size_t elicitations = 0;
    std::size_t unparseable = 0;
    std::size_t clipped = 0;
    std::size_t skipped_profiles = 0; ///< respondents lacking a demographic answer
};

struct BootstrapSummary {
    std::string condition_a;
    std::string condition_b;
    inference::BootstrapResult result;
};

struct PctChangeRow {
    std::string question;
    std::string condition_a;
    std::string condition_b;
    double tvd_a = 0.0;
    double tvd_b = 0.0;
    double pct_change = 0.0;
};

/// Share of answers per category for one series of one question.
struct FrequencyTable {
    std::string question;
    std::string condition;
    std::vector<std::string> labels;
    std::vector<double> truth;
    std::vector<double> predicted;
    std::size_t n_truth = 0;
    std::size_t n_predicted = 0;
};

/// Equal-width histogram densities over the pooled range of truth and prediction.
struct DensityTable {
    std::string question;
    std::string condition;
    std::vector<double> edges;
    std::vector<double> truth;
    std::vector<double> predicted;
};

struct TercileRow {
    std::string question;
    std::string condition;
    std::string tercile;
    std::optional<double> mean_by_truth;
    std::optional<double> mean_by_prediction;
    std::size_t n_by_truth = 0;
    std::size_t n_by_prediction = 0;
};

struct AgeBandRow {
    std::string question;
    std::string series;
    int lo = 0;
    int hi = 0; ///< exclusive
    std::optional<double> mean;
    std::size_t n = 0;
};

struct CountryRow {
    std::string question;
    std::string country;
    std::string condition;
    std::string option;
    double simulated = 0.0;
    double reference = 0.0;
    std::size_t n = 0; ///< parsed predictions behind `simulated`
};

/// Diagnostic battery and moderation model for one series of the regression study.
struct RegressionSeries {
    std::string name;
    std::optional<psychometrics::RegressionResult> regression;
    std::optional<psychometrics::SimpleSlopesResult> slopes;
    std::map<std::string, metrics::AlphaDecomposition> alpha;
    std::map<std::string, double> icc; ///< by scale; NaN when undefined
    std::optional<metrics::DiversityResult> diversity;
    std::map<std::string, double> item_entropy;
    std::map<std::string, double> scale_entropy;
    std::map<std::string, double> scale_means;
    std::size_t agents = 0;
    std::size_t deleted = 0;
};

struct EvalReport {
    StudyKind kind = StudyKind::individual;
    std::vector<std::string> questions;
    std::vector<std::string> conditions;
    std::vector<metrics::MetricRecord> metrics;
    std::vector<FailureEntry> failures;
    std::vector<ConditionDiagnostics> diagnostics;
    std::vector<BootstrapSummary> bootstraps;
    std::vector<PctChangeRow> pct_changes;
    std::vector<forest::EvaluationRecord> baselines;
    std::vector<FrequencyTable> frequencies;
    std::vector<DensityTable> densities;
    std::vector<TercileRow> terciles;
    std::vector<AgeBandRow> age_bands;
    std::vector<CountryRow> country_rows;
    std::vector<RegressionSeries> regression;

    /// Metric value for (question, condition, metric), if present.
    std::optional<double> metric(const std::string &question, const std::string &condition,
                                 const std::string &metric) const;
};

nlohmann::json to_json(const EvalReport &report);

/// Writes the selected formats below `dir`; returns the files written, relative to `dir`, sorted.
/// delimited: summary.csv plus per-study tables; structured: report.json;
/// plot-data: plot/frequencies/<q>__<c>.csv, plot/densities/<q>__<c>.csv and friends.
/// Throws IoError when the directory cannot be created or a file cannot be written.
std::vector<std::string> emit_report(const EvalReport &report, const std::filesystem::path &dir,
                                     const std::set<OutputFormat> &formats);

} // namespace surveysim::study
