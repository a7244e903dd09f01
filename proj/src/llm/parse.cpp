#include "surveysim/llm/parse.hpp"

#include "surveysim/common/text.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <vector>

namespace surveysim::llm {

using corpus::AnswerValue;
using corpus::MissingReason;

std::string strip_thinking(std::string_view raw, const ThinkMarkers &markers) {
    std::string out;
    std::size_t pos = 0;
    const auto first_close = raw.find(markers.close);
    const auto first_open = raw.find(markers.open);
    if (first_close != std::string_view::npos && (first_open == std::string_view::npos || first_close < first_open)) {
        pos = first_close + markers.close.size();
    }
    while (pos < raw.size()) {
        const auto open = raw.find(markers.open, pos);
        if (open == std::string_view::npos) {
            out.append(raw.substr(pos));
            break;
        }
        out.append(raw.substr(pos, open - pos));
        const auto close = raw.find(markers.close, open + markers.open.size());
        if (close == std::string_view::npos) {
            break;
        }
        pos = close + markers.close.size();
    }
    return out;
}

double to_percent_scale(double value, const corpus::NumericKind &range) {
    if (range.max == range.min) {
        return 0.0;
    }
    return (value - range.min) / (range.max - range.min) * 100.0;
}

double from_percent_scale(double percent, const corpus::NumericKind &range) {
    return range.min + percent / 100.0 * (range.max - range.min);
}

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view trailing_word_context(std::string_view text, std::size_t end) {
    // Lower-cased text up to `end` with trailing blanks removed.
    while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1])) != 0) {
        --end;
    }
    return text.substr(0, end);
}

bool is_denominator(const std::string &lower, std::size_t start) {
    const auto before = trailing_word_context(lower, start);
    if (before.ends_with("out of")) {
        return true;
    }
    if (before.ends_with("/")) {
        const auto prev = trailing_word_context(before, before.size() - 1);
        return !prev.empty() && is_digit(prev.back());
    }
    return false;
}

/// "1,250": a comma followed by exactly three digits.
bool grouping_comma(const std::string &s, std::size_t i) {
    if (s[i] != ',' || i + 3 >= s.size()) {
        return false;
    }
    if (!is_digit(s[i + 1]) || !is_digit(s[i + 2]) || !is_digit(s[i + 3])) {
        return false;
    }
    return i + 4 == s.size() || !is_digit(s[i + 4]);
}

/// Last number in `text` that is not a denominator. Accepts "1,250.5" style grouping.
std::optional<double> last_number(std::string_view text) {
    const std::string lower = text::to_lower(text);
    std::optional<double> found;
    std::size_t i = 0;
    while (i < lower.size()) {
        if (!is_digit(lower[i]) || (i > 0 && (is_alnum(lower[i - 1]) || lower[i - 1] == '.'))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        std::string digits;
        while (i < lower.size() && (is_digit(lower[i]) || grouping_comma(lower, i))) {
            if (lower[i] != ',') {
                digits.push_back(lower[i]);
            }
            ++i;
        }
        if (i + 1 < lower.size() && lower[i] == '.' && is_digit(lower[i + 1])) {
            digits.push_back('.');
            ++i;
            while (i < lower.size() && is_digit(lower[i])) {
                digits.push_back(lower[i]);
                ++i;
            }
        }
        bool negative = start > 0 && lower[start - 1] == '-' && (start < 2 || !is_alnum(lower[start - 2]));
        if (is_denominator(lower, negative ? start - 1 : start)) {
            continue;
        }
        if (auto v = text::parse_double(digits)) {
            found = negative ? -*v : *v;
        }
    }
    return found;
}

struct LabelMatch {
    std::size_t end = 0;
    std::size_t length = 0;
};

/// End offset of the last whole-word occurrence of `needle` in `hay` (both normalized).
std::optional<std::size_t> last_occurrence_end(const std::string &hay, const std::string &needle) {
    if (needle.empty()) {
        return std::nullopt;
    }
    auto pos = hay.rfind(needle);
    while (pos != std::string::npos) {
        const std::size_t end = pos + needle.size();
        const bool left = pos == 0 || hay[pos - 1] == ' ';
        const bool right = end == hay.size() || hay[end] == ' ';
        if (left && right) {
            return end;
        }
        if (pos == 0) {
            break;
        }
        pos = hay.rfind(needle, pos - 1);
    }
    return std::nullopt;
}

ParseOutcome parse_categorical(const std::string &body, const corpus::SurveyItem &item) {
    const auto hay = text::normalize_for_match(body);
    std::optional<LabelMatch> best;
    AnswerValue chosen = AnswerValue::missing(MissingReason::unparseable);
    auto consider = [&](const std::string &label, AnswerValue value) {
        const auto needle = text::normalize_for_match(label);
        const auto end = last_occurrence_end(hay, needle);
        if (!end) {
            return;
        }
        if (!best || *end > best->end || (*end == best->end && needle.size() > best->length)) {
            best = LabelMatch{*end, needle.size()};
            chosen = std::move(value);
        }
    };
    for (const auto &option : item.options()) {
        consider(option, AnswerValue::categorical(option));
    }
    for (auto reason : {MissingReason::dont_know, MissingReason::refusal}) {
        if (!item.option_index(corpus::to_string(reason))) {
            consider(corpus::to_string(reason), AnswerValue::missing(reason));
        }
    }
    return {chosen, false};
}

} // namespace

ParseOutcome parse_answer(std::string_view raw_text, const corpus::SurveyItem &item, agents::ResponseMode mode,
                          const ThinkMarkers &markers) {
    const auto body = strip_thinking(raw_text, markers);
    if (mode == agents::ResponseMode::discrete_options && item.is_categorical()) {
        return parse_categorical(body, item);
    }
    if (!item.is_numeric()) {
        return {AnswerValue::missing(MissingReason::unparseable), false};
    }
    const auto number = last_number(body);
    if (!number) {
        return {AnswerValue::missing(MissingReason::unparseable), false};
    }
    const auto &range = item.range();
    if (mode == agents::ResponseMode::continuous_0_100) {
        const double clipped = std::clamp(*number, 0.0, 100.0);
        return {AnswerValue::numeric(from_percent_scale(clipped, range)), clipped != *number};
    }
    const double clipped = std::clamp(*number, range.min, range.max);
    return {AnswerValue::numeric(clipped), clipped != *number};
}

} // namespace surveysim::llm
