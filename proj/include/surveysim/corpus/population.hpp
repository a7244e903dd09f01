#pragma once

#include "surveysim/corpus/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace surveysim::corpus {

struct AgeRange {
    int lo = 0;
    int hi = 0; ///< inclusive

    bool contains(int age) const noexcept { return age >= lo && age <= hi; }
};

/// Keeps respondents whose country is in `countries` (empty set = any country)
/// and whose age lies in `age_range` when given. Instrument is unchanged.
SurveyCorpus filter_population(const SurveyCorpus &corpus, const std::set<std::string> &countries,
                               std::optional<AgeRange> age_range = std::nullopt);

enum class DemographicVariant { demo7, demo3 };

/// Which instrument items carry the five non-synthesized demographics.
/// Defaults follow SHARE variable naming.
struct DemographicItems {
    std::string gender = "DN042";
    std::string employment = "EP005";
    std::string marital_status = "DN014";
    std::string income = "CO007";
    std::string education_years = "DN041";
};

inline constexpr const char *kCountryQuestion = "Country";
inline constexpr const char *kAgeQuestion = "Age";

struct QuestionAnswer {
    std::string question;
    std::string answer;

    bool operator==(const QuestionAnswer &) const = default;
};

/// Demo7: country, age, gender, employment, marital status, income, education years.
/// Demo3: country, age, gender. Country and age come from the record fields.
/// Throws IncompleteProfileError when a required item is unanswered.
std::vector<QuestionAnswer> extract_demographics(const RespondentRecord &record,
                                                 const Instrument &instrument,
                                                 DemographicVariant variant,
                                                 const DemographicItems &items = {});

/// Target marginals for stratified_match. Respondents are first restricted to
/// `age_bounds`, then grouped by their answer to `stratum_item` (or by country
/// when stratum_item == "country").
struct MatchTargets {
    std::string stratum_item;
    std::map<std::string, std::size_t> counts;
    std::optional<AgeRange> age_bounds;
};

/// Draws exactly counts[s] respondents from every stratum s, deterministically for a
/// given seed. Output keeps corpus order. Throws StratumShortageError naming the
/// first stratum that cannot be filled, ConfigurationError when counts do not sum to n.
SurveyCorpus stratified_match(const SurveyCorpus &corpus, const MatchTargets &targets,
                              std::size_t n, std::uint64_t seed);

} // namespace surveysim::corpus
