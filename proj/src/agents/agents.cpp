#include "surveysim/agents/agents.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/text.hpp"

#include <nlohmann/json.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <ostream>

namespace surveysim::agents {

using nlohmann::json;

const std::string_view kSystemPrompt =
    "You are an expert behavioral analyst and survey researcher. Your task is to analyze a set of "
    "survey questions and the corresponding answers provided by a single respondent. Based on the "
    "patterns, tone, preferences, and reasoning evident in their responses, infer how this same person "
    "would likely answer a new, unseen question. Your predictions should be thoughtful, consistent with "
    "the respondent’s previous answers, and reflect their likely perspective, values, and "
    "communication style.";

const std::string_view kBridgingSentence =
    "The text above contains answers from a person to a survey of health, ageing and retirement in "
    "Europe. Analyzing those questions and answers, try to predict how this same person would answer "
    "to the following question: ";

std::string to_string(Condition c) {
    switch (c) {
    case Condition::demo7:
        return "demo7";
    case Condition::demo3:
        return "demo3";
    case Condition::survey_anchored:
        return "survey_anchored";
    }
    return "survey_anchored";
}

Condition condition_from_string(std::string_view name) {
    const auto n = text::to_lower(text::trim(name));
    if (n == "demo7") {
        return Condition::demo7;
    }
    if (n == "demo3") {
        return Condition::demo3;
    }
    if (n == "survey_anchored" || n == "survey") {
        return Condition::survey_anchored;
    }
    throw ConfigurationError("unknown condition '" + std::string(name) + "'");
}

void ExclusionList::validate(const corpus::Instrument &instrument) const {
    std::vector<std::string> unknown;
    for (const auto &code : item_codes) {
        if (!instrument.contains(code)) {
            unknown.push_back(code);
        }
    }
    if (!unknown.empty()) {
        throw ConfigurationError("exclusion list references unknown items: " + text::join(unknown, ", "));
    }
}

ExclusionList share_leakage_exclusions() {
    return {{"cf011_", "cf012_", "cf013_", "cf014_", "cf015_", "cf108_", "cf109_", "cf110_", "cf111_",
             "cf112_"},
            "numeracy items overlapping the financial-literacy targets"};
}

namespace {

AgentProfile assemble_profile(const corpus::RespondentRecord &record, const corpus::Instrument &instrument,
                              Condition condition, const ExclusionList &exclusions,
                              const corpus::SurveyItem *target_item,
                              const corpus::DemographicItems &demographics) {
    AgentProfile profile{record.respondent_id, condition, {}, std::nullopt};
    if (target_item) {
        profile.withheld_item = target_item->code;
    }

    if (condition != Condition::survey_anchored) {
        const auto variant =
            condition == Condition::demo7 ? corpus::DemographicVariant::demo7 : corpus::DemographicVariant::demo3;
        profile.context = corpus::extract_demographics(record, instrument, variant, demographics);
        if (target_item) {
            std::erase_if(profile.context,
                          [&](const QuestionAnswer &qa) { return qa.question == target_item->question_text; });
        }
        return profile;
    }

    profile.context.push_back({corpus::kCountryQuestion, record.country});
    profile.context.push_back({corpus::kAgeQuestion, std::to_string(record.age)});
    for (const auto &item : instrument.items()) {
        if ((target_item && item.code == target_item->code) || exclusions.item_codes.contains(item.code)) {
            continue;
        }
        const auto *answer = record.find(item.code);
        if (answer == nullptr || answer->is_missing()) {
            continue;
        }
        profile.context.push_back({item.question_text, answer->display()});
    }
    return profile;
}

} // namespace

AgentProfile build_profile(const corpus::RespondentRecord &record, const corpus::Instrument &instrument,
                           Condition condition, const ExclusionList &exclusions, const std::string &target,
                           const corpus::DemographicItems &demographics) {
    return assemble_profile(record, instrument, condition, exclusions, &instrument.at(target), demographics);
}

AgentProfile build_external_profile(const corpus::RespondentRecord &record, const corpus::Instrument &instrument,
                                    Condition condition, const ExclusionList &exclusions,
                                    const corpus::DemographicItems &demographics) {
    return assemble_profile(record, instrument, condition, exclusions, nullptr, demographics);
}

std::string to_string(ResponseMode m) {
    return m == ResponseMode::discrete_options ? "discrete" : "continuous";
}

ResponseMode response_mode_from_string(std::string_view name) {
    const auto n = text::to_lower(text::trim(name));
    if (n == "discrete" || n == "discrete_options") {
        return ResponseMode::discrete_options;
    }
    if (n == "continuous" || n == "continuous_0_100") {
        return ResponseMode::continuous_0_100;
    }
    throw ConfigurationError("unknown response mode '" + std::string(name) + "'");
}

void TargetQuestion::validate() const {
    if (mode == ResponseMode::continuous_0_100 && !item.is_numeric()) {
        throw ConfigurationError("continuous mode requires a numeric item, '" + item.code + "' is categorical");
    }
}

TargetQuestion make_target(const corpus::SurveyItem &item, ResponseMode mode, std::string anchor_low,
                           std::string anchor_high) {
    TargetQuestion t{item, item.question_text, mode, std::move(anchor_low), std::move(anchor_high), {}};
    t.validate();
    return t;
}

std::vector<double> discrete_grid(const TargetQuestion &target) {
    if (!target.grid.empty()) {
        return target.grid;
    }
    const auto &r = target.item.range();
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) {
        grid.push_back(i == 10 ? r.max : r.min + i * (r.max - r.min) / 10.0);
    }
    return grid;
}

std::string serialize_context(std::span<const QuestionAnswer> context) {
    std::string out;
    for (const auto &qa : context) {
        out += json(qa.question).dump();
        out += ": ";
        out += json(qa.answer).dump();
        out += '\n';
    }
    return out;
}

namespace {

std::string answer_instruction(const TargetQuestion &target) {
    if (target.mode == ResponseMode::continuous_0_100) {
        if (target.anchor_low.empty() && target.anchor_high.empty()) {
            return "[Answer from 0 to 100.]";
        }
        return fmt::format("[Answer from 0 to 100, 0 ({}) and 100 ({}).]", target.anchor_low, target.anchor_high);
    }
    if (target.item.is_categorical()) {
        return "[" + text::join(target.item.options(), ", ") + "]";
    }
    std::vector<std::string> values;
    for (double v : discrete_grid(target)) {
        values.push_back(text::format_number(v));
    }
    return "[" + text::join(values, ",") + "]";
}

} // namespace

PromptBundle render_prompt(const AgentProfile &profile, const TargetQuestion &target,
                           const llm::GenerationConfig &generation) {
    target.validate();
    std::string user = serialize_context(profile.context);
    if (!user.empty()) {
        user += '\n';
    }
    user += kBridgingSentence;
    user += target.rendered_text;
    user += '\n';
    user += answer_instruction(target);
    return {std::string(kSystemPrompt), std::move(user), generation};
}

std::string_view context_section(const PromptBundle &bundle) {
    const std::string_view user = bundle.user_text;
    const auto pos = user.find(kBridgingSentence);
    return pos == std::string_view::npos ? user : user.substr(0, pos);
}

TargetQuestion individualize_target(const TargetQuestion &tmpl, int age, std::span<const AgeRule> rules) {
    const auto rule = std::find_if(rules.begin(), rules.end(),
                                   [age](const AgeRule &r) { return age >= r.lo && age <= r.hi; });
    if (rule == rules.end()) {
        throw RuleGapError(fmt::format("no age rule covers age {} for item '{}'", age, tmpl.item.code));
    }
    TargetQuestion out = tmpl;
    out.rendered_text = text::replace_all(tmpl.rendered_text, kAgePlaceholder, std::to_string(rule->target_age));
    return out;
}

void write_transcript_line(std::ostream &out, const AgentProfile &profile, const TargetQuestion &target,
                           const PromptBundle &bundle) {
    const auto &g = bundle.generation;
    json j = {{"respondent_id", profile.respondent_id},
              {"item_code", target.item.code},
              {"condition", to_string(profile.condition)},
              {"system", bundle.system_text},
              {"user", bundle.user_text},
              {"generation",
               {{"model", g.model_name},
                {"temperature", g.temperature},
                {"top_k", g.top_k},
                {"top_p", g.top_p},
                {"repeat_penalty", g.repeat_penalty},
                {"think", g.thinking_enabled},
                {"num_ctx", g.context_window}}}};
    out << j.dump() << '\n';
}

} // namespace surveysim::agents
