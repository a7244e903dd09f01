#pragma once

#include "surveysim/corpus/population.hpp"
#include "surveysim/corpus/types.hpp"
#include "surveysim/llm/generation_config.hpp"

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace surveysim::agents {

using corpus::QuestionAnswer;

enum class Condition { demo7, demo3, survey_anchored };

/// "demo7", "demo3", "survey_anchored".
std::string to_string(Condition c);
/// Accepts the names above plus "survey" as shorthand; throws ConfigurationError.
Condition condition_from_string(std::string_view name);

/// Items removed from every context because they overlap with evaluation targets.
struct ExclusionList {
    std::set<std::string> item_codes;
    std::string reason;

    /// Throws ConfigurationError listing codes missing from the instrument.
    void validate(const corpus::Instrument &instrument) const;
};

/// The cognitive-function items that restate the financial-literacy targets.
ExclusionList share_leakage_exclusions();

struct AgentProfile {
    std::string respondent_id;
    Condition condition = Condition::survey_anchored;
    std::vector<QuestionAnswer> context;
    std::optional<std::string> withheld_item;

    bool operator==(const AgentProfile &) const = default;
};

/// Survey-anchored: Country and Age first, then every answered item in instrument
/// order except the target and the exclusions; missing answers are left out.
/// Demo7/Demo3: the demographic pairs only, minus the target if it is one of them.
/// Throws IntegrityError for an unknown target, IncompleteProfileError for
/// demographic variants with unanswered demographic items.
AgentProfile build_profile(const corpus::RespondentRecord &record, const corpus::Instrument &instrument,
                           Condition condition, const ExclusionList &exclusions, const std::string &target,
                           const corpus::DemographicItems &demographics = {});

/// Profile for a question from outside the instrument: only the exclusions are removed.
AgentProfile build_external_profile(const corpus::RespondentRecord &record, const corpus::Instrument &instrument,
                                    Condition condition, const ExclusionList &exclusions,
                                    const corpus::DemographicItems &demographics = {});

enum class ResponseMode { discrete_options, continuous_0_100 };

std::string to_string(ResponseMode m);
ResponseMode response_mode_from_string(std::string_view name);

struct TargetQuestion {
    corpus::SurveyItem item;
    std::string rendered_text;
    ResponseMode mode = ResponseMode::discrete_options;
    /// Meaning of 0 and 100 in continuous mode, e.g. "you are certain you will not reach that age".
    std::string anchor_low;
    std::string anchor_high;
    /// Answer grid shown for numeric items in discrete mode. Empty: 11 evenly spaced points.
    std::vector<double> grid;

    /// Throws ConfigurationError when continuous mode is used on a categorical item.
    void validate() const;
};

/// Target with the item's own text.
TargetQuestion make_target(const corpus::SurveyItem &item, ResponseMode mode = ResponseMode::discrete_options,
                           std::string anchor_low = {}, std::string anchor_high = {});

/// Values offered for a numeric item in discrete mode.
std::vector<double> discrete_grid(const TargetQuestion &target);

struct PromptBundle {
    std::string system_text;
    std::string user_text;
    llm::GenerationConfig generation;

    bool operator==(const PromptBundle &) const = default;
};

extern const std::string_view kSystemPrompt;
extern const std::string_view kBridgingSentence;

/// One `"question": "answer"` line per pair, strings JSON-escaped.
std::string serialize_context(std::span<const QuestionAnswer> context);

/// Context, blank line, bridging sentence immediately followed by the target text,
/// then the bracketed options (discrete) or the 0-100 anchor (continuous).
PromptBundle render_prompt(const AgentProfile &profile, const TargetQuestion &target,
                           const llm::GenerationConfig &generation = {});

/// Part of user_text that carries the respondent's context (before the bridging sentence).
std::string_view context_section(const PromptBundle &bundle);

struct AgeRule {
    int lo = 0;
    int hi = 0; ///< inclusive
    int target_age = 0;
};

inline constexpr std::string_view kAgePlaceholder = "XX";

/// Replaces the placeholder with the target age of the first band containing `age`.
/// Throws RuleGapError when no band applies.
TargetQuestion individualize_target(const TargetQuestion &tmpl, int age, std::span<const AgeRule> rules);

/// One JSON object per line: respondent_id, item_code, condition, system, user, generation.
void write_transcript_line(std::ostream &out, const AgentProfile &profile, const TargetQuestion &target,
                           const PromptBundle &bundle);

} // namespace surveysim::agents
