#pragma once

#include "surveysim/agents/agents.hpp"
#include "surveysim/corpus/types.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <variant>

namespace surveysim::llm {

/// Repeats the respondent's own answer.
struct EchoTruth {};

/// Answers cluster around `mean`. Numeric items: N(mean, dispersion) in item units,
/// clipped to the range. Categorical items: `mean` is a 0-based option position
/// (NaN = middle option) and option i gets weight exp(-((i - mean) / dispersion)^2 / 2).
struct CentralTendency {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double dispersion = 1.0;
};

/// The correct label with probability `accuracy`, otherwise the respondent's answer.
struct HyperAccurate {
    std::string correct_label;
    double accuracy = 1.0;
};

/// Uniform over options, or uniform over the integer values of a numeric range.
struct UniformRandom {};

/// Always the same text.
struct FixedLabel {
    std::string label;
};

using MockPolicy = std::variant<EchoTruth, CentralTendency, HyperAccurate, UniformRandom, FixedLabel>;

std::string policy_name(const MockPolicy &policy);

/// Throws ConfigurationError when the policy cannot answer this item
/// (label outside the options, parameters out of range, numeric label outside range).
void check_policy(const MockPolicy &policy, const corpus::SurveyItem &item);

/// Deterministic in (target, policy, truth, seed). Numeric answers in continuous mode
/// are written on the 0..100 scale; elsewhere in item units, rounded to integers.
/// Throws ConfigurationError on a policy/item mismatch or a missing truth where
/// EchoTruth/HyperAccurate need one (missing truths are echoed by reason name).
std::string simulate_mock(const agents::AgentProfile &profile, const agents::TargetQuestion &target,
                          const MockPolicy &policy, const corpus::AnswerValue &truth, std::uint64_t seed);

} // namespace surveysim::llm
