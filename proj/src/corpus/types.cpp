#include "surveysim/corpus/types.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/text.hpp"

#include <cmath>
#include <set>

namespace surveysim::corpus {

std::optional<std::size_t> SurveyItem::option_index(const std::string &label) const {
    if (!is_categorical()) {
        return std::nullopt;
    }
    const auto &opts = options();
    for (std::size_t i = 0; i < opts.size(); ++i) {
        if (opts[i] == label) {
            return i;
        }
    }
    return std::nullopt;
}

void SurveyItem::validate() const {
    if (code.empty()) {
        throw ValidationError("survey item with empty code");
    }
    if (is_categorical()) {
        const auto &opts = options();
        std::set<std::string> unique(opts.begin(), opts.end());
        if (opts.size() < 2) {
            throw ValidationError("categorical item '" + code + "' needs at least 2 options");
        }
        if (unique.size() != opts.size()) {
            throw ValidationError("categorical item '" + code + "' has duplicate option labels");
        }
    } else {
        const auto &r = range();
        if (!(r.min < r.max)) {
            throw ValidationError("numeric item '" + code + "' needs min < max");
        }
    }
}

std::string to_string(MissingReason reason) {
    switch (reason) {
    case MissingReason::refusal:
        return "Refusal";
    case MissingReason::dont_know:
        return "Don't know";
    case MissingReason::not_applicable:
        return "Not applicable";
    case MissingReason::unparseable:
        return "Unparseable";
    }
    return "Unparseable";
}

std::optional<MissingReason> missing_reason_from_string(const std::string &name) {
    const auto key = text::normalize_for_match(name);
    if (key == "refusal") {
        return MissingReason::refusal;
    }
    if (key == "don t know" || key == "dont know" || key == "dont_know") {
        return MissingReason::dont_know;
    }
    if (key == "not applicable" || key == "not_applicable") {
        return MissingReason::not_applicable;
    }
    if (key == "unparseable") {
        return MissingReason::unparseable;
    }
    return std::nullopt;
}

std::string AnswerValue::display() const {
    if (is_categorical()) {
        return label();
    }
    if (is_numeric()) {
        return text::format_number(number());
    }
    return to_string(reason());
}

bool AnswerValue::conforms_to(const SurveyItem &item) const noexcept {
    if (is_missing()) {
        return true;
    }
    if (is_categorical()) {
        return item.option_index(label()).has_value();
    }
    if (!item.is_numeric()) {
        return false;
    }
    const auto &r = item.range();
    return std::isfinite(number()) && number() >= r.min && number() <= r.max;
}

void AnswerValue::check_against(const SurveyItem &item) const {
    if (conforms_to(item)) {
        return;
    }
    if (is_categorical() && item.is_categorical()) {
        throw IntegrityError("item '" + item.code + "': '" + label() + "' is not one of its options");
    }
    if (is_categorical()) {
        throw IntegrityError("item '" + item.code + "' is numeric but got label '" + label() + "'");
    }
    if (item.is_categorical()) {
        throw IntegrityError("item '" + item.code + "' is categorical but got number " + display());
    }
    throw IntegrityError("item '" + item.code + "': value " + display() + " outside [" +
                         text::format_number(item.range().min) + ", " +
                         text::format_number(item.range().max) + "]");
}

const AnswerValue *RespondentRecord::find(const std::string &code) const {
    auto it = answers.find(code);
    return it == answers.end() ? nullptr : &it->second;
}

bool RespondentRecord::answered(const std::string &code) const {
    const auto *a = find(code);
    return a != nullptr && !a->is_missing();
}

Instrument::Instrument(std::vector<SurveyItem> items) : items_{std::move(items)} {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        items_[i].validate();
        if (!index_.emplace(items_[i].code, i).second) {
            throw IntegrityError("duplicate item code '" + items_[i].code + "' in instrument");
        }
    }
}

const SurveyItem *Instrument::find(const std::string &code) const {
    auto it = index_.find(code);
    return it == index_.end() ? nullptr : &items_[it->second];
}

const SurveyItem &Instrument::at(const std::string &code) const {
    const auto *item = find(code);
    if (item == nullptr) {
        throw IntegrityError("unknown item code '" + code + "'");
    }
    return *item;
}

std::size_t Instrument::position(const std::string &code) const {
    auto it = index_.find(code);
    if (it == index_.end()) {
        throw IntegrityError("unknown item code '" + code + "'");
    }
    return it->second;
}

void SurveyCorpus::validate() const {
    std::set<std::string> ids;
    std::set<std::string> unknown;
    for (const auto &r : respondents) {
        if (!ids.insert(r.respondent_id).second) {
            throw IntegrityError("duplicate respondent_id '" + r.respondent_id + "'");
        }
        for (const auto &[code, answer] : r.answers) {
            const auto *item = instrument.find(code);
            if (item == nullptr) {
                unknown.insert(code);
                continue;
            }
            answer.check_against(*item);
        }
    }
    if (!unknown.empty()) {
        throw IntegrityError("unknown item codes: " +
                             text::join({unknown.begin(), unknown.end()}, ", "));
    }
}

const RespondentRecord *SurveyCorpus::find_respondent(const std::string &id) const {
    for (const auto &r : respondents) {
        if (r.respondent_id == id) {
            return &r;
        }
    }
    return nullptr;
}

void ReferenceDistribution::validate() const {
    double total = 0.0;
    for (const auto &[label, p] : frequencies) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ValidationError("reference " + item_code + "/" + stratum + ": proportion for '" +
                                  label + "' outside [0,1]");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("reference " + item_code + "/" + stratum +
                              ": proportions sum to " + text::format_number(total));
    }
}

std::optional<double> ReferenceDistribution::share(const std::string &label) const {
    for (const auto &[l, p] : frequencies) {
        if (l == label) {
            return p;
        }
    }
    return std::nullopt;
}

} // namespace surveysim::corpus
