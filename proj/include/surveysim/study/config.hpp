#pragma once

// Declarative description of one study run, loaded from a single JSON document.

#include "surveysim/agents/agents.hpp"
#include "surveysim/corpus/io.hpp"
#include "surveysim/corpus/population.hpp"
#include "surveysim/forest/forest.hpp"
#include "surveysim/llm/backend.hpp"
#include "surveysim/llm/batch.hpp"
#include "surveysim/metrics/fidelity.hpp"
#include "surveysim/psychometrics/psychometrics.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace surveysim::study {

enum class StudyKind { individual, country, regression };

std::string to_string(StudyKind k);
StudyKind study_kind_from_string(std::string_view name);

/// Where respondents come from: a file pair, or a built-in synthetic corpus
/// ("share_like" or "gss_like") of `fixture_n` respondents.
struct CorpusSource {
    std::string fixture;
    std::size_t fixture_n = 500;
    std::uint64_t fixture_seed = 1;
    std::filesystem::path instrument;
    std::filesystem::path respondents;
    corpus::RespondentFormat format = corpus::RespondentFormat::delimited_table;
};

/// Country study inputs. `fixture` = "eurobarometer_like" uses the built-in items and shares.
struct ReferenceSource {
    std::string fixture;
    std::filesystem::path instrument;
    std::filesystem::path distributions;
};

struct TargetSpec {
    std::string code;
    agents::ResponseMode mode = agents::ResponseMode::discrete_options;
    std::string anchor_low;
    std::string anchor_high;
    std::vector<double> grid;
    bool individualize_age = false; ///< substitute the age placeholder via `age_rules`
    std::string correct_label;      ///< objective items: report the correct-answer share
};

enum class BackendKind { mock, live };

struct BackendSpec {
    BackendKind kind = BackendKind::mock;
    llm::PolicyTable policies;
    llm::Endpoint endpoint;
};

struct BootstrapSpec {
    bool enabled = true;
    std::size_t iterations = 5000;
    double confidence = 0.95;
    /// (a, b) condition pairs; delta = TVD(a) - TVD(b). Empty: every demographic
    /// condition against survey_anchored when both are configured.
    std::vector<std::pair<std::string, std::string>> pairs;
};

struct ForestSpec {
    bool enabled = false;
    forest::Grid grid;
};

enum class OutputFormat { delimited, structured, plot_data };

std::string to_string(OutputFormat f);
OutputFormat output_format_from_string(std::string_view name);

struct StudyConfig {
    StudyKind kind = StudyKind::individual;
    CorpusSource corpus;
    ReferenceSource references;

    std::set<std::string> countries; ///< empty keeps every country
    std::optional<corpus::AgeRange> age_range;
    std::optional<std::size_t> sample_size; ///< seeded subsample after filtering

    std::vector<agents::Condition> conditions{agents::Condition::demo7, agents::Condition::demo3,
                                              agents::Condition::survey_anchored};
    std::vector<TargetSpec> targets; ///< regression studies default to every scale item
    std::vector<agents::AgeRule> age_rules;
    agents::ExclusionList exclusions;
    corpus::DemographicItems demographics;

    BackendSpec backend;
    llm::GenerationConfig generation;
    std::size_t runs = 1;
    llm::Aggregation aggregation = llm::Aggregation::single;
    std::size_t workers = 0;
    std::size_t max_failures = 25;
    std::uint64_t seed = 0;

    std::size_t tvd_bins = metrics::kDefaultTvdBins;
    BootstrapSpec bootstrap;
    ForestSpec forest;
    std::vector<int> age_band_edges{50, 60, 70, 80, 90, 130}; ///< bands are [edge_i, edge_i+1)

    std::vector<psychometrics::ScaleDefinition> scales; ///< regression study; preset "retirement"
    std::vector<std::string> icc_strata;                ///< items whose answers define ICC groups
    double slope_band = 1.0;
    std::map<std::string, std::string> label_map; ///< predicted label -> reference label

    std::filesystem::path output_dir;
    std::set<OutputFormat> formats{OutputFormat::delimited, OutputFormat::structured, OutputFormat::plot_data};

    /// Condition pairs the bootstrap compares.
    std::vector<std::pair<std::string, std::string>> bootstrap_pairs() const;
};

/// Throws ConfigurationError (or ParseError for malformed JSON) with the offending key.
StudyConfig parse_config(const nlohmann::json &doc, const std::filesystem::path &base_dir = {});
StudyConfig load_config(const std::filesystem::path &path);
nlohmann::json policy_to_json(const llm::MockPolicy &policy);
llm::MockPolicy policy_from_json(const nlohmann::json &j);

} // namespace surveysim::study
