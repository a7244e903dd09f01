#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace surveysim::corpus {

struct CategoricalKind {
    std::vector<std::string> options; ///< declared order is the canonical order for reports

    bool operator==(const CategoricalKind &) const = default;
};

struct NumericKind {
    double min = 0.0;
    double max = 100.0;

    bool operator==(const NumericKind &) const = default;
};

using ItemKind = std::variant<CategoricalKind, NumericKind>;

struct SurveyItem {
    std::string code;
    std::string question_text;
    ItemKind kind;
    std::string section;
    bool reverse_coded = false;

    bool is_categorical() const noexcept { return std::holds_alternative<CategoricalKind>(kind); }
    bool is_numeric() const noexcept { return std::holds_alternative<NumericKind>(kind); }

    /// Throws std::bad_variant_access when called on the wrong kind.
    const std::vector<std::string> &options() const { return std::get<CategoricalKind>(kind).options; }
    const NumericKind &range() const { return std::get<NumericKind>(kind); }

    std::optional<std::size_t> option_index(const std::string &label) const;

    /// Checks the item invariants; throws ValidationError.
    void validate() const;

    bool operator==(const SurveyItem &) const = default;
};

enum class MissingReason { refusal, dont_know, not_applicable, unparseable };

std::string to_string(MissingReason reason);
std::optional<MissingReason> missing_reason_from_string(const std::string &name);

struct Categorical {
    std::string label;
    bool operator==(const Categorical &) const = default;
};

struct Numeric {
    double value = 0.0;
    bool operator==(const Numeric &) const = default;
};

struct Missing {
    MissingReason reason = MissingReason::unparseable;
    bool operator==(const Missing &) const = default;
};

/// A respondent's (or an agent's) answer to one item.
class AnswerValue {
  public:
    AnswerValue() : value_{Missing{}} {}
    AnswerValue(Categorical v) : value_{std::move(v)} {}
    AnswerValue(Numeric v) : value_{v} {}
    AnswerValue(Missing v) : value_{v} {}

    static AnswerValue categorical(std::string label) { return Categorical{std::move(label)}; }
    static AnswerValue numeric(double value) { return Numeric{value}; }
    static AnswerValue missing(MissingReason reason) { return Missing{reason}; }

    bool is_categorical() const noexcept { return std::holds_alternative<Categorical>(value_); }
    bool is_numeric() const noexcept { return std::holds_alternative<Numeric>(value_); }
    bool is_missing() const noexcept { return std::holds_alternative<Missing>(value_); }

    const std::string &label() const { return std::get<Categorical>(value_).label; }
    double number() const { return std::get<Numeric>(value_).value; }
    MissingReason reason() const { return std::get<Missing>(value_).reason; }

    const std::variant<Categorical, Numeric, Missing> &variant() const noexcept { return value_; }

    /// Text used in prompts and frequency tables: the label, the formatted number,
    /// or the missing-reason name ("Refusal", "Don't know", ...).
    std::string display() const;

    /// Checks the value against its item; throws IntegrityError naming the item.
    void check_against(const SurveyItem &item) const;
    bool conforms_to(const SurveyItem &item) const noexcept;

    bool operator==(const AnswerValue &) const = default;

  private:
    std::variant<Categorical, Numeric, Missing> value_;
};

struct RespondentRecord {
    std::string respondent_id;
    std::string country;
    int age = 0;
    std::map<std::string, AnswerValue> answers; ///< item code -> answer

    const AnswerValue *find(const std::string &code) const;
    /// Present and not Missing.
    bool answered(const std::string &code) const;

    bool operator==(const RespondentRecord &) const = default;
};

/// Ordered collection of items with code lookup.
class Instrument {
  public:
    Instrument() = default;
    explicit Instrument(std::vector<SurveyItem> items);

    const std::vector<SurveyItem> &items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }

    const SurveyItem *find(const std::string &code) const;
    /// Throws IntegrityError if the code is unknown.
    const SurveyItem &at(const std::string &code) const;
    bool contains(const std::string &code) const { return find(code) != nullptr; }
    std::size_t position(const std::string &code) const;

    bool operator==(const Instrument &other) const { return items_ == other.items_; }

  private:
    std::vector<SurveyItem> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Immutable after construction; safe to share between threads for reading.
struct SurveyCorpus {
    Instrument instrument;
    std::vector<RespondentRecord> respondents;
    std::string provenance;

    /// Unique ids, every answer key known, every answer type-checks.
    void validate() const;

    const RespondentRecord *find_respondent(const std::string &id) const;

    bool operator==(const SurveyCorpus &) const = default;
};

/// External reference shares for one item in one stratum (usually a country).
struct ReferenceDistribution {
    std::string item_code;
    std::string stratum;
    std::vector<std::pair<std::string, double>> frequencies; ///< file order preserved

    void validate() const;
    std::optional<double> share(const std::string &label) const;
};

} // namespace surveysim::corpus
