#include "internal.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/random.hpp"
#include "surveysim/common/text.hpp"
#include "surveysim/fixtures/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace surveysim::study {

namespace detail {

std::map<PredictionKey, corpus::AnswerValue> final_predictions(const std::vector<llm::PredictionRecord> &records) {
    std::map<PredictionKey, corpus::AnswerValue> out;
    for (const auto &r : records) {
        if (r.is_final()) {
            out.insert_or_assign({r.respondent_id, r.item_code, r.condition}, r.parsed);
        }
    }
    return out;
}

std::vector<ConditionDiagnostics> diagnostics(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records) {
    std::vector<ConditionDiagnostics> out;
    for (const auto &name : condition_names(plan.config)) {
        ConditionDiagnostics d{name};
        for (const auto &t : plan.tasks) {
            d.tasks += agents::to_string(t.profile.condition) == name;
        }
        for (const auto &r : records) {
            if (r.condition != name) {
                continue;
            }
            if (r.role != llm::RecordRole::aggregate) {
                ++d.elicitations;
                d.clipped += r.clipped;
            }
            if (r.is_final() && r.parsed.is_missing() && r.parsed.reason() == corpus::MissingReason::unparseable) {
                ++d.unparseable;
            }
        }
        if (auto it = plan.skipped_profiles.find(name); it != plan.skipped_profiles.end()) {
            d.skipped_profiles = it->second;
        }
        out.push_back(d);
    }
    return out;
}

std::vector<std::string> condition_names(const StudyConfig &config) {
    std::vector<std::string> out;
    for (auto c : config.conditions) {
        out.push_back(agents::to_string(c));
    }
    return out;
}

std::vector<std::string> target_codes(const StudyPlan &plan) {
    std::vector<std::string> out;
    for (const auto &t : plan.config.targets) {
        out.push_back(t.code);
    }
    return out;
}

std::uint64_t derived_seed(const StudyConfig &config, std::string_view purpose, std::string_view detail) {
    return SeedSequence(config.seed).mix(purpose).mix(detail).value();
}

std::string num(double v) {
    return std::isnan(v) ? "NA" : text::format_number(v);
}

} // namespace detail

namespace {

corpus::SurveyCorpus load_population(const StudyConfig &config) {
    corpus::SurveyCorpus c;
    const auto &src = config.corpus;
    if (src.fixture == "share_like") {
        c = fixtures::share_like(src.fixture_n, src.fixture_seed);
    } else if (src.fixture == "gss_like") {
        c = fixtures::gss_like(src.fixture_n, src.fixture_seed);
    } else if (!src.fixture.empty()) {
        throw ConfigurationError("unknown corpus fixture '" + src.fixture + "'");
    } else {
        c = corpus::load_corpus(src.instrument, src.respondents, src.format);
    }
    if (!config.countries.empty() || config.age_range) {
        c = corpus::filter_population(c, config.countries, config.age_range);
    }
    if (config.sample_size && *config.sample_size < c.respondents.size()) {
        std::vector<std::size_t> idx(c.respondents.size());
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng = SeedSequence(detail::derived_seed(config, "sample")).engine();
        shuffle(std::span<std::size_t>(idx), rng);
        idx.resize(*config.sample_size);
        std::sort(idx.begin(), idx.end());
        std::vector<corpus::RespondentRecord> kept;
        for (auto i : idx) {
            kept.push_back(std::move(c.respondents[i]));
        }
        c.respondents = std::move(kept);
    }
    if (c.respondents.empty()) {
        throw InsufficientDataError("no respondents remain after filtering");
    }
    return c;
}

/// Integer grid for short integer scales shown as discrete options (1..7 answers as 1,2,...,7).
std::vector<double> default_grid(const corpus::SurveyItem &item) {
    if (!item.is_numeric()) {
        return {};
    }
    const auto &r = item.range();
    if (r.min == std::floor(r.min) && r.max == std::floor(r.max) && r.max - r.min <= 10.0) {
        std::vector<double> g;
        for (double v = r.min; v <= r.max; v += 1.0) {
            g.push_back(v);
        }
        return g;
    }
    return {};
}

void check_references(const StudyPlan &plan) {
    std::set<std::string> countries = plan.config.countries;
    if (countries.empty()) {
        for (const auto &r : plan.corpus.respondents) {
            countries.insert(r.country);
        }
    }
    for (const auto &country : countries) {
        for (const auto &t : plan.config.targets) {
            const bool found = std::any_of(plan.references.begin(), plan.references.end(), [&](const auto &ref) {
                return ref.item_code == t.code && ref.stratum == country;
            });
            if (!found) {
                throw CoverageError("no reference distribution for country '" + country + "' on item '" + t.code +
                                    "'");
            }
        }
    }
}

} // namespace

StudyPlan plan_study(const StudyConfig &config) {
    StudyPlan plan;
    plan.config = config;
    plan.corpus = load_population(config);
    auto &cfg = plan.config;

    if (cfg.kind == StudyKind::country) {
        if (cfg.references.fixture == "eurobarometer_like") {
            plan.target_items = fixtures::eurobarometer_like_instrument();
            std::set<std::string> countries = cfg.countries;
            if (countries.empty()) {
                for (const auto &r : plan.corpus.respondents) {
                    countries.insert(r.country);
                }
            }
            plan.references = fixtures::eurobarometer_like_references({countries.begin(), countries.end()});
        } else if (!cfg.references.fixture.empty()) {
            throw ConfigurationError("unknown reference fixture '" + cfg.references.fixture + "'");
        } else {
            plan.target_items = corpus::load_instrument(cfg.references.instrument);
            plan.references = corpus::load_references(cfg.references.distributions);
        }
    } else {
        plan.target_items = plan.corpus.instrument;
    }

    if (cfg.targets.empty()) {
        if (cfg.kind == StudyKind::regression) {
            for (const auto &s : cfg.scales) {
                for (const auto &code : s.item_codes) {
                    cfg.targets.emplace_back().code = code;
                }
            }
        } else if (cfg.kind == StudyKind::country) {
            for (const auto &item : plan.target_items.items()) {
                cfg.targets.emplace_back().code = item.code;
            }
        } else {
            throw ConfigurationError("individual study needs at least one target");
        }
    }
    std::set<std::string> seen;
    for (const auto &t : cfg.targets) {
        if (!plan.target_items.contains(t.code)) {
            throw ConfigurationError("target item '" + t.code + "' is not in the instrument");
        }
        if (!seen.insert(t.code).second) {
            throw ConfigurationError("target item '" + t.code + "' listed twice");
        }
        if (t.individualize_age && cfg.age_rules.empty()) {
            throw ConfigurationError("target '" + t.code + "' substitutes ages but no age_rules are configured");
        }
    }
    cfg.exclusions.validate(plan.corpus.instrument);
    for (const auto &s : cfg.scales) {
        for (const auto &code : s.item_codes) {
            if (!plan.corpus.instrument.contains(code)) {
                throw ConfigurationError("scale '" + s.name + "' references unknown item '" + code + "'");
            }
        }
    }
    for (const auto &code : cfg.icc_strata) {
        if (!plan.corpus.instrument.contains(code)) {
            throw ConfigurationError("icc_strata references unknown item '" + code + "'");
        }
    }
    if (cfg.kind == StudyKind::country) {
        check_references(plan);
    }
    if (cfg.backend.kind == BackendKind::mock) {
        for (auto c : cfg.conditions) {
            for (const auto &t : cfg.targets) {
                const auto *policy = llm::find_policy(cfg.backend.policies, agents::to_string(c), t.code);
                if (policy == nullptr) {
                    throw ConfigurationError("mock policy map does not cover " + agents::to_string(c) + ":" + t.code);
                }
                llm::check_policy(*policy, plan.target_items.at(t.code));
            }
        }
    }

    std::vector<agents::TargetQuestion> templates;
    for (const auto &t : cfg.targets) {
        auto q = agents::make_target(plan.target_items.at(t.code), t.mode, t.anchor_low, t.anchor_high);
        q.grid = t.grid.empty() && t.mode == agents::ResponseMode::discrete_options ? default_grid(q.item) : t.grid;
        templates.push_back(std::move(q));
    }

    const bool external = cfg.kind == StudyKind::country;
    for (const auto &record : plan.corpus.respondents) {
        for (std::size_t k = 0; k < cfg.targets.size(); ++k) {
            const auto &spec = cfg.targets[k];
            corpus::AnswerValue truth = corpus::AnswerValue::missing(corpus::MissingReason::not_applicable);
            if (!external) {
                const auto *answer = record.find(spec.code);
                if (answer == nullptr) {
                    continue;
                }
                truth = *answer;
            }
            const auto target = spec.individualize_age
                                    ? agents::individualize_target(templates[k], record.age, cfg.age_rules)
                                    : templates[k];
            for (auto condition : cfg.conditions) {
                agents::AgentProfile profile;
                try {
                    profile = external ? agents::build_external_profile(record, plan.corpus.instrument, condition,
                                                                        cfg.exclusions, cfg.demographics)
                                       : agents::build_profile(record, plan.corpus.instrument, condition,
                                                               cfg.exclusions, spec.code, cfg.demographics);
                } catch (const IncompleteProfileError &) {
                    ++plan.skipped_profiles[agents::to_string(condition)];
                    continue;
                }
                auto bundle = agents::render_prompt(profile, target, cfg.generation);
                plan.tasks.push_back({std::move(profile), target, std::move(bundle), truth});
            }
        }
    }
    return plan;
}

std::unique_ptr<llm::Backend> make_backend(const StudyConfig &config) {
    if (config.backend.kind == BackendKind::mock) {
        return std::make_unique<llm::MockBackend>(config.backend.policies, detail::derived_seed(config, "mock"));
    }
    return std::make_unique<llm::HttpBackend>(config.backend.endpoint);
}

llm::BatchResult elicit(const StudyPlan &plan, llm::Backend &backend) {
    llm::BatchOptions options;
    options.runs = plan.config.runs;
    options.aggregation = plan.config.aggregation;
    options.workers = plan.config.workers;
    options.max_failures = plan.config.max_failures;
    if (!plan.config.output_dir.empty()) {
        const auto dir = plan.config.output_dir;
        options.on_abort = [dir](const std::vector<llm::PredictionRecord> &partial) {
            std::filesystem::create_directories(dir);
            std::ofstream out(dir / "predictions.partial.jsonl");
            llm::write_prediction_log(out, partial);
        };
    }
    return llm::run_batch(plan.tasks, backend, plan.corpus, options);
}

EvalReport assemble_report(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records) {
    EvalReport report;
    report.kind = plan.config.kind;
    report.questions = detail::target_codes(plan);
    report.conditions = detail::condition_names(plan.config);
    report.diagnostics = detail::diagnostics(plan, records);
    switch (plan.config.kind) {
    case StudyKind::individual:
        detail::assemble_individual(plan, records, report);
        break;
    case StudyKind::country:
        detail::assemble_country(plan, records, report);
        break;
    case StudyKind::regression:
        detail::assemble_regression(plan, records, report);
        break;
    }
    std::sort(report.metrics.begin(), report.metrics.end(), [](const auto &a, const auto &b) {
        return std::tie(a.question, a.condition, a.metric) < std::tie(b.question, b.condition, b.metric);
    });
    return report;
}

EvalReport replay_report(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records) {
    llm::ReplayBackend backend(records);
    return assemble_report(plan, elicit(plan, backend).records);
}

namespace {

StudyOutcome run_kind(const StudyConfig &config, llm::Backend *backend, StudyKind expected) {
    if (config.kind != expected) {
        throw ConfigurationError("config describes a " + to_string(config.kind) + " study, not " +
                                 to_string(expected));
    }
    return run_study(config, backend);
}

} // namespace

StudyOutcome run_study(const StudyConfig &config, llm::Backend *backend) {
    const auto plan = plan_study(config);
    std::unique_ptr<llm::Backend> owned;
    if (backend == nullptr) {
        owned = make_backend(plan.config);
        backend = owned.get();
    }
    auto batch = elicit(plan, *backend);
    StudyOutcome out{assemble_report(plan, batch.records), std::move(batch.records)};
    return out;
}

StudyOutcome run_individual_study(const StudyConfig &config, llm::Backend *backend) {
    return run_kind(config, backend, StudyKind::individual);
}

StudyOutcome run_country_study(const StudyConfig &config, llm::Backend *backend) {
    return run_kind(config, backend, StudyKind::country);
}

StudyOutcome run_regression_study(const StudyConfig &config, llm::Backend *backend) {
    return run_kind(config, backend, StudyKind::regression);
}

std::vector<std::string> leakage_audit(const StudyPlan &plan) {
    std::vector<std::string> hits;
    for (const auto &task : plan.tasks) {
        const auto context = agents::context_section(task.bundle);
        std::vector<std::string> forbidden;
        if (task.profile.withheld_item) {
            forbidden.push_back(plan.corpus.instrument.at(*task.profile.withheld_item).question_text);
        }
        for (const auto &code : plan.config.exclusions.item_codes) {
            forbidden.push_back(plan.corpus.instrument.at(code).question_text);
        }
        for (const auto &text : forbidden) {
            // Context lines are JSON-escaped; look for both renderings.
            const auto escaped = nlohmann::json(text).dump();
            if (context.find(text) != std::string_view::npos ||
                context.find(std::string_view(escaped).substr(1, escaped.size() - 2)) != std::string_view::npos) {
                hits.push_back(task.respondent_id() + "/" + task.item_code() + "/" +
                               agents::to_string(task.profile.condition) + ": " + text);
            }
        }
    }
    return hits;
}

} // namespace surveysim::study
