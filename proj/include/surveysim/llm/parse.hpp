#pragma once

#include "surveysim/agents/agents.hpp"
#include "surveysim/corpus/types.hpp"

#include <string>
#include <string_view>

namespace surveysim::llm {

struct ThinkMarkers {
    std::string open = "<think>";
    std::string close = "</think>";
};

/// Removes every open..close segment. An unterminated open marker drops the rest of
/// the text; a close marker with no opener drops everything before it.
std::string strip_thinking(std::string_view raw, const ThinkMarkers &markers = {});

struct ParseOutcome {
    corpus::AnswerValue value;
    bool clipped = false;
};

/// Discrete mode, categorical item: the option label (or missing-reason name such as
/// "Don't know") whose last occurrence ends latest in the normalized text; on equal
/// end positions the longer label wins.
/// Discrete mode, numeric item: the last number, clipped to the item range.
/// Continuous mode: the last number clipped to [0, 100], then mapped linearly onto the
/// item range. Denominators ("out of 100", "/100") are not candidates.
/// Anything else yields Missing(unparseable).
ParseOutcome parse_answer(std::string_view raw_text, const corpus::SurveyItem &item, agents::ResponseMode mode,
                          const ThinkMarkers &markers = {});

/// Item-scale value expressed on the 0..100 elicitation scale.
double to_percent_scale(double value, const corpus::NumericKind &range);
double from_percent_scale(double percent, const corpus::NumericKind &range);

} // namespace surveysim::llm
