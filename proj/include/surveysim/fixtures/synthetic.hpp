#pragma once

// Synthetic corpora shaped like the three study data sources. Respondents are drawn
// from latent traits so that context items carry real information about the targets.

#include "surveysim/agents/agents.hpp"
#include "surveysim/corpus/types.hpp"
#include "surveysim/psychometrics/psychometrics.hpp"

#include <cstdint>
#include <vector>

namespace surveysim::fixtures {

/// Codes of the individual-level targets in share_like().
inline const std::vector<std::string> kShareTargets{"FTP01", "FTP02", "FTP03", "FRT01", "cf015_"};
/// Correct option of the compound-interest item.
inline constexpr const char *kCompoundInterestAnswer = "2420";

/// Respondents aged 50-94 from Spain, France and Germany. Demographics use the SHARE codes of
/// corpus::DemographicItems; numeracy items cf011_-cf015_ and cf108_-cf112_ are included.
/// Roughly 45% of answered cf015_ are correct and ~8% are Refusal / Don't know.
corpus::SurveyCorpus share_like(std::size_t n, std::uint64_t seed);

/// Target-age bands for "live to age XX" (e.g. age 67 -> 80).
std::vector<agents::AgeRule> share_age_rules();

/// Items of an external country-level survey (financial-literacy flash poll style).
corpus::Instrument eurobarometer_like_instrument();
/// Country-level shares for every item of eurobarometer_like_instrument() and each country.
std::vector<corpus::ReferenceDistribution> eurobarometer_like_references(const std::vector<std::string> &countries);

/// US respondents with GSS-style context items (demographic codes in gss_demographics()) plus
/// the 22 retirement-attitude items KFP1-6, FTP1-6, FRT1-5, RS1-5 on 1..7. Retirement saving
/// follows 0.5 KFP + 0.25 FTP + 0.15 FRT - 0.2 KFP*FTP*FRT on the latent scale.
corpus::SurveyCorpus gss_like(std::size_t n, std::uint64_t seed);
corpus::DemographicItems gss_demographics();
/// Scale definitions for the 22 items (FTP3-FTP6 reverse-coded).
std::vector<psychometrics::ScaleDefinition> retirement_scales();

} // namespace surveysim::fixtures
