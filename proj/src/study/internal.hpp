#pragma once

// Helpers shared by the study assemblers. Not part of the public interface.

#include "surveysim/study/study.hpp"

#include <map>
#include <string>
#include <tuple>

namespace surveysim::study::detail {

using PredictionKey = std::tuple<std::string, std::string, std::string>; ///< respondent, item, condition

/// Final (single or aggregate) parsed answer per task.
std::map<PredictionKey, corpus::AnswerValue> final_predictions(const std::vector<llm::PredictionRecord> &records);

std::vector<ConditionDiagnostics> diagnostics(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records);

std::vector<std::string> condition_names(const StudyConfig &config);
std::vector<std::string> target_codes(const StudyPlan &plan);

/// Seed for a named sub-computation, independent of everything else in the run.
std::uint64_t derived_seed(const StudyConfig &config, std::string_view purpose, std::string_view detail = {});

void assemble_individual(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records, EvalReport &report);
void assemble_country(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records, EvalReport &report);
void assemble_regression(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records, EvalReport &report);

/// Shortest round-trip rendering; "NA" for NaN.
std::string num(double v);

} // namespace surveysim::study::detail
