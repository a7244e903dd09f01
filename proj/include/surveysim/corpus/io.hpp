#pragma once

#include "surveysim/corpus/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace surveysim::corpus {

enum class RespondentFormat { delimited_table, record_json };

RespondentFormat respondent_format_from_string(const std::string &name);
std::string to_string(RespondentFormat format);

struct LoadOptions {
    /// Answer strings that map to a Missing reason. Matched after trimming, case-sensitive.
    std::map<std::string, MissingReason> missing_sentinels = {
        {"Refusal", MissingReason::refusal},
        {"Don't know", MissingReason::dont_know},
        {"Not applicable", MissingReason::not_applicable},
    };
    /// Used when the file carries `birth_year` instead of `age`.
    int reference_year = 2021;
    char delimiter = ',';
    std::string provenance;
};

/// Reserved respondent columns; every other column/key must be an item code.
inline constexpr const char *kRespondentIdField = "respondent_id";
inline constexpr const char *kCountryField = "country";
inline constexpr const char *kAgeField = "age";
inline constexpr const char *kBirthYearField = "birth_year";

/// Instrument file: one JSON object per line with
/// {code, text, kind: "categorical"|"numeric", options | range, section, reverse_coded}.
Instrument read_instrument(std::istream &in);
Instrument load_instrument(const std::filesystem::path &path);
void write_instrument(std::ostream &out, const Instrument &instrument);

std::vector<RespondentRecord> read_respondents(std::istream &in, const Instrument &instrument,
                                               RespondentFormat format,
                                               const LoadOptions &options = {});

void write_respondents(std::ostream &out, const SurveyCorpus &corpus, RespondentFormat format,
                       char delimiter = ',');

/// Loads instrument + respondents and validates the result.
SurveyCorpus load_corpus(const std::filesystem::path &instrument_path,
                         const std::filesystem::path &respondents_path, RespondentFormat format,
                         const LoadOptions &options = {});

void save_corpus(const SurveyCorpus &corpus, const std::filesystem::path &instrument_path,
                 const std::filesystem::path &respondents_path, RespondentFormat format);

/// Reference file: delimited table with header item_code,stratum,option_label,proportion.
std::vector<ReferenceDistribution> read_references(std::istream &in, char delimiter = ',');
std::vector<ReferenceDistribution> load_references(const std::filesystem::path &path);
void write_references(std::ostream &out, const std::vector<ReferenceDistribution> &refs);

} // namespace surveysim::corpus
