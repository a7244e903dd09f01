#include "surveysim/corpus/population.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/random.hpp"
#include "surveysim/corpus/io.hpp"

#include <algorithm>
#include <numeric>

namespace surveysim::corpus {

SurveyCorpus filter_population(const SurveyCorpus &corpus, const std::set<std::string> &countries,
                               std::optional<AgeRange> age_range) {
    SurveyCorpus out;
    out.instrument = corpus.instrument;
    out.provenance = corpus.provenance;
    for (const auto &r : corpus.respondents) {
        if (!countries.empty() && !countries.contains(r.country)) {
            continue;
        }
        if (age_range && !age_range->contains(r.age)) {
            continue;
        }
        out.respondents.push_back(r);
    }
    return out;
}

namespace {

QuestionAnswer required_pair(const RespondentRecord &record, const Instrument &instrument,
                             const std::string &code) {
    const auto *item = instrument.find(code);
    const auto *answer = record.find(code);
    if (item == nullptr || answer == nullptr || answer->is_missing()) {
        throw IncompleteProfileError(record.respondent_id, code);
    }
    return {item->question_text, answer->display()};
}

} // namespace

std::vector<QuestionAnswer> extract_demographics(const RespondentRecord &record,
                                                 const Instrument &instrument,
                                                 DemographicVariant variant,
                                                 const DemographicItems &items) {
    std::vector<QuestionAnswer> out;
    out.push_back({kCountryQuestion, record.country});
    out.push_back({kAgeQuestion, std::to_string(record.age)});
    out.push_back(required_pair(record, instrument, items.gender));
    if (variant == DemographicVariant::demo3) {
        return out;
    }
    out.push_back(required_pair(record, instrument, items.employment));
    out.push_back(required_pair(record, instrument, items.marital_status));
    out.push_back(required_pair(record, instrument, items.income));
    out.push_back(required_pair(record, instrument, items.education_years));
    return out;
}

SurveyCorpus stratified_match(const SurveyCorpus &corpus, const MatchTargets &targets,
                              std::size_t n, std::uint64_t seed) {
    const std::size_t requested =
        std::accumulate(targets.counts.begin(), targets.counts.end(), std::size_t{0},
                        [](std::size_t acc, const auto &kv) { return acc + kv.second; });
    if (requested != n) {
        throw ConfigurationError("stratum counts sum to " + std::to_string(requested) +
                                 ", expected " + std::to_string(n));
    }
    const bool by_country = targets.stratum_item == kCountryField;
    if (!by_country && !corpus.instrument.contains(targets.stratum_item)) {
        throw ConfigurationError("stratum item '" + targets.stratum_item + "' not in instrument");
    }

    std::map<std::string, std::vector<std::size_t>> pools;
    for (std::size_t i = 0; i < corpus.respondents.size(); ++i) {
        const auto &r = corpus.respondents[i];
        if (targets.age_bounds && !targets.age_bounds->contains(r.age)) {
            continue;
        }
        std::string stratum;
        if (by_country) {
            stratum = r.country;
        } else {
            const auto *a = r.find(targets.stratum_item);
            if (a == nullptr || a->is_missing()) {
                continue;
            }
            stratum = a->display();
        }
        pools[stratum].push_back(i);
    }

    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    for (const auto &[stratum, count] : targets.counts) {
        if (count == 0) {
            continue;
        }
        auto it = pools.find(stratum);
        const std::size_t available = it == pools.end() ? 0 : it->second.size();
        if (available < count) {
            throw StratumShortageError(stratum, count, available);
        }
        auto pool = it->second;
        auto rng = SeedSequence{seed}.mix(stratum).engine();
        shuffle(std::span<std::size_t>{pool}, rng);
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
    }
    std::sort(chosen.begin(), chosen.end());

    SurveyCorpus out;
    out.instrument = corpus.instrument;
    out.provenance = corpus.provenance;
    for (auto i : chosen) {
        out.respondents.push_back(corpus.respondents[i]);
    }
    return out;
}

} // namespace surveysim::corpus
