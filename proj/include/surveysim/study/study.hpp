#pragma once

#include "surveysim/corpus/types.hpp"
#include "surveysim/llm/backend.hpp"
#include "surveysim/llm/batch.hpp"
#include "surveysim/study/config.hpp"
#include "surveysim/study/report.hpp"

#include <memory>
#include <vector>

namespace surveysim::study {

/// Everything a study needs before elicitation: population, targets and the ordered work list.
struct StudyPlan {
    StudyConfig config;
    corpus::SurveyCorpus corpus;     ///< after filtering and sampling
    corpus::Instrument target_items; ///< instrument targets are drawn from (external for country studies)
    std::vector<corpus::ReferenceDistribution> references;
    std::vector<llm::ElicitationTask> tasks; ///< respondent-major, then item, then condition
    std::map<std::string, std::size_t> skipped_profiles; ///< by condition
};

/// Loads the corpus, validates the config against it and builds every prompt.
StudyPlan plan_study(const StudyConfig &config);

/// Backend described by the config (mock policies or live endpoint).
std::unique_ptr<llm::Backend> make_backend(const StudyConfig &config);

/// Runs the work list. On abort the partial log is written to `output_dir/predictions.partial.jsonl`
/// (when an output directory is configured) before BackendUnavailableError propagates.
llm::BatchResult elicit(const StudyPlan &plan, llm::Backend &backend);

/// Deterministic reduction of a completed prediction log into a report.
EvalReport assemble_report(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records);

/// Re-runs the work list against a recorded log; no backend is contacted.
EvalReport replay_report(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records);

struct StudyOutcome {
    EvalReport report;
    std::vector<llm::PredictionRecord> records;
};

StudyOutcome run_individual_study(const StudyConfig &config, llm::Backend *backend = nullptr);
StudyOutcome run_country_study(const StudyConfig &config, llm::Backend *backend = nullptr);
StudyOutcome run_regression_study(const StudyConfig &config, llm::Backend *backend = nullptr);
/// Dispatches on config.kind.
StudyOutcome run_study(const StudyConfig &config, llm::Backend *backend = nullptr);

/// Context sections that contain the text of a withheld or excluded question, one entry per hit.
std::vector<std::string> leakage_audit(const StudyPlan &plan);

} // namespace surveysim::study
