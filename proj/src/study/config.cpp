#include "surveysim/study/config.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/text.hpp"
#include "surveysim/fixtures/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>

namespace surveysim::study {

using nlohmann::json;

std::string to_string(StudyKind k) {
    switch (k) {
    case StudyKind::individual:
        return "individual";
    case StudyKind::country:
        return "country";
    case StudyKind::regression:
        return "regression";
    }
    return "individual";
}

StudyKind study_kind_from_string(std::string_view name) {
    const auto n = text::to_lower(text::trim(name));
    if (n == "individual") {
        return StudyKind::individual;
    }
    if (n == "country") {
        return StudyKind::country;
    }
    if (n == "regression") {
        return StudyKind::regression;
    }
    throw ConfigurationError("unknown study kind '" + std::string(name) + "'");
}

std::string to_string(OutputFormat f) {
    switch (f) {
    case OutputFormat::delimited:
        return "delimited";
    case OutputFormat::structured:
        return "structured";
    case OutputFormat::plot_data:
        return "plot-data";
    }
    return "delimited";
}

OutputFormat output_format_from_string(std::string_view name) {
    const auto n = text::to_lower(text::trim(name));
    if (n == "delimited" || n == "csv") {
        return OutputFormat::delimited;
    }
    if (n == "structured" || n == "structured-records" || n == "json") {
        return OutputFormat::structured;
    }
    if (n == "plot-data" || n == "plot_data" || n == "plot") {
        return OutputFormat::plot_data;
    }
    throw ConfigurationError("unknown output format '" + std::string(name) + "'");
}

std::vector<std::pair<std::string, std::string>> StudyConfig::bootstrap_pairs() const {
    if (!bootstrap.pairs.empty()) {
        return bootstrap.pairs;
    }
    std::vector<std::pair<std::string, std::string>> out;
    const bool anchored = std::find(conditions.begin(), conditions.end(), agents::Condition::survey_anchored) !=
                          conditions.end();
    if (!anchored) {
        return out;
    }
    for (auto c : conditions) {
        if (c != agents::Condition::survey_anchored) {
            out.emplace_back(agents::to_string(c), agents::to_string(agents::Condition::survey_anchored));
        }
    }
    return out;
}

json policy_to_json(const llm::MockPolicy &policy) {
    json j{{"policy", llm::policy_name(policy)}};
    if (const auto *c = std::get_if<llm::CentralTendency>(&policy)) {
        if (!std::isnan(c->mean)) {
            j["mean"] = c->mean;
        }
        j["dispersion"] = c->dispersion;
    } else if (const auto *h = std::get_if<llm::HyperAccurate>(&policy)) {
        j["correct_label"] = h->correct_label;
        j["accuracy"] = h->accuracy;
    } else if (const auto *f = std::get_if<llm::FixedLabel>(&policy)) {
        j["label"] = f->label;
    }
    return j;
}

llm::MockPolicy policy_from_json(const json &j) {
    const auto name = text::to_lower(j.at("policy").get<std::string>());
    if (name == "echo_truth") {
        return llm::EchoTruth{};
    }
    if (name == "uniform_random") {
        return llm::UniformRandom{};
    }
    if (name == "central_tendency") {
        llm::CentralTendency p;
        p.mean = j.value("mean", p.mean);
        p.dispersion = j.value("dispersion", p.dispersion);
        return p;
    }
    if (name == "hyper_accurate") {
        return llm::HyperAccurate{j.at("correct_label").get<std::string>(), j.value("accuracy", 1.0)};
    }
    if (name == "fixed_label") {
        const auto &label = j.at("label");
        return llm::FixedLabel{label.is_string() ? label.get<std::string>() : label.dump()};
    }
    throw ConfigurationError("unknown mock policy '" + name + "'");
}

namespace {

void reject_unknown(const json &obj, std::initializer_list<const char *> known, const std::string &where) {
    for (const auto &[key, value] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char *k) { return key == k; })) {
            throw ConfigurationError("unknown key '" + key + "' in " + where);
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path &base, const json &value) {
    std::filesystem::path p = value.get<std::string>();
    return p.is_relative() && !base.empty() ? base / p : p;
}

TargetSpec parse_target(const json &j) {
    TargetSpec t;
    if (j.is_string()) {
        t.code = j.get<std::string>();
        return t;
    }
    reject_unknown(j, {"code", "mode", "anchor_low", "anchor_high", "grid", "individualize_age", "correct_label"},
                   "target");
    t.code = j.at("code").get<std::string>();
    if (j.contains("mode")) {
        t.mode = agents::response_mode_from_string(j["mode"].get<std::string>());
    }
    t.anchor_low = j.value("anchor_low", "");
    t.anchor_high = j.value("anchor_high", "");
    t.grid = j.value("grid", std::vector<double>{});
    t.individualize_age = j.value("individualize_age", false);
    t.correct_label = j.value("correct_label", "");
    return t;
}

llm::Endpoint parse_endpoint(const json &j) {
    reject_unknown(j, {"base_url", "path", "api", "auth_header", "auth_env", "timeout_ms", "max_attempts", "backoff_ms"},
                   "backend.endpoint");
    llm::Endpoint e;
    e.base_url = j.value("base_url", e.base_url);
    e.path = j.value("path", e.path);
    if (j.contains("api")) {
        const auto api = text::to_lower(j["api"].get<std::string>());
        if (api == "ollama_chat" || api == "ollama") {
            e.api = llm::ApiStyle::ollama_chat;
        } else if (api == "openai_chat" || api == "openai") {
            e.api = llm::ApiStyle::openai_chat;
        } else {
            throw ConfigurationError("unknown api style '" + api + "'");
        }
    }
    e.auth_header = j.value("auth_header", "");
    // Secrets stay out of the config file: only the variable name is recorded.
    if (j.contains("auth_env")) {
        const auto var = j["auth_env"].get<std::string>();
        const char *value = std::getenv(var.c_str());
        if (value == nullptr) {
            throw ConfigurationError("environment variable '" + var + "' named by backend.endpoint.auth_env is unset");
        }
        e.auth_value = value;
    }
    e.timeout_ms = j.value("timeout_ms", e.timeout_ms);
    e.max_attempts = j.value("max_attempts", e.max_attempts);
    e.backoff_ms = j.value("backoff_ms", e.backoff_ms);
    return e;
}

llm::GenerationConfig parse_generation(const json &j) {
    reject_unknown(j, {"model", "temperature", "top_k", "top_p", "repeat_penalty", "think", "num_ctx"}, "generation");
    llm::GenerationConfig g;
    g.model_name = j.value("model", g.model_name);
    g.temperature = j.value("temperature", g.temperature);
    g.top_k = j.value("top_k", g.top_k);
    g.top_p = j.value("top_p", g.top_p);
    g.repeat_penalty = j.value("repeat_penalty", g.repeat_penalty);
    g.thinking_enabled = j.value("think", g.thinking_enabled);
    g.context_window = j.value("num_ctx", g.context_window);
    g.validate();
    return g;
}

std::vector<psychometrics::ScaleDefinition> parse_scales(const json &j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "retirement") {
            return fixtures::retirement_scales();
        }
        throw ConfigurationError("unknown scale preset '" + j.get<std::string>() + "'");
    }
    std::vector<psychometrics::ScaleDefinition> out;
    for (const auto &s : j) {
        reject_unknown(s, {"name", "items", "reverse", "min", "max"}, "scales");
        psychometrics::ScaleDefinition d;
        d.name = s.at("name").get<std::string>();
        d.item_codes = s.at("items").get<std::vector<std::string>>();
        const auto reversed = s.value("reverse", std::vector<std::string>{});
        for (const auto &code : d.item_codes) {
            d.reverse_flags.push_back(std::find(reversed.begin(), reversed.end(), code) != reversed.end());
        }
        d.scale_min = s.value("min", d.scale_min);
        d.scale_max = s.value("max", d.scale_max);
        d.validate();
        out.push_back(std::move(d));
    }
    return out;
}

StudyConfig parse_config_impl(const json &doc, const std::filesystem::path &base) {
    reject_unknown(doc,
                   {"study", "corpus", "references", "countries", "age_range", "sample_size", "conditions", "targets",
                    "age_rules", "exclusions", "demographics", "backend", "generation", "runs", "aggregation",
                    "workers", "max_failures", "seed", "tvd_bins", "bootstrap", "forest", "age_bands", "scales",
                    "icc_strata", "slope_band", "label_map", "output", "formats"},
                   "study config");
    StudyConfig c;
    c.kind = study_kind_from_string(doc.at("study").get<std::string>());

    if (doc.contains("corpus")) {
        const auto &j = doc["corpus"];
        reject_unknown(j, {"fixture", "n", "fixture_seed", "instrument", "respondents", "format"}, "corpus");
        c.corpus.fixture = j.value("fixture", "");
        c.corpus.fixture_n = j.value("n", c.corpus.fixture_n);
        c.corpus.fixture_seed = j.value("fixture_seed", c.corpus.fixture_seed);
        if (j.contains("instrument")) {
            c.corpus.instrument = resolve(base, j["instrument"]);
        }
        if (j.contains("respondents")) {
            c.corpus.respondents = resolve(base, j["respondents"]);
        }
        if (j.contains("format")) {
            c.corpus.format = corpus::respondent_format_from_string(j["format"].get<std::string>());
        }
    } else {
        throw ConfigurationError("study config needs a 'corpus' section");
    }
    if (c.corpus.fixture.empty() && (c.corpus.instrument.empty() || c.corpus.respondents.empty())) {
        throw ConfigurationError("corpus needs either 'fixture' or both 'instrument' and 'respondents'");
    }

    if (doc.contains("references")) {
        const auto &j = doc["references"];
        reject_unknown(j, {"fixture", "instrument", "distributions"}, "references");
        c.references.fixture = j.value("fixture", "");
        if (j.contains("instrument")) {
            c.references.instrument = resolve(base, j["instrument"]);
        }
        if (j.contains("distributions")) {
            c.references.distributions = resolve(base, j["distributions"]);
        }
    }

    if (doc.contains("countries")) {
        const auto list = doc["countries"].get<std::vector<std::string>>();
        c.countries = {list.begin(), list.end()};
    }
    if (doc.contains("age_range")) {
        const auto r = doc["age_range"].get<std::vector<int>>();
        if (r.size() != 2 || r[0] > r[1]) {
            throw ConfigurationError("age_range must be [lo, hi] with lo <= hi");
        }
        c.age_range = corpus::AgeRange{r[0], r[1]};
    }
    if (doc.contains("sample_size")) {
        c.sample_size = doc["sample_size"].get<std::size_t>();
    }
    if (doc.contains("conditions")) {
        c.conditions.clear();
        for (const auto &name : doc["conditions"]) {
            const auto cond = agents::condition_from_string(name.get<std::string>());
            if (std::find(c.conditions.begin(), c.conditions.end(), cond) != c.conditions.end()) {
                throw ConfigurationError("condition '" + name.get<std::string>() + "' listed twice");
            }
            c.conditions.push_back(cond);
        }
        if (c.conditions.empty()) {
            throw ConfigurationError("at least one condition is required");
        }
    }
    if (doc.contains("targets")) {
        for (const auto &t : doc["targets"]) {
            c.targets.push_back(parse_target(t));
        }
    }
    if (doc.contains("age_rules")) {
        const auto &j = doc["age_rules"];
        if (j.is_string()) {
            if (j.get<std::string>() != "share") {
                throw ConfigurationError("unknown age_rules preset '" + j.get<std::string>() + "'");
            }
            c.age_rules = fixtures::share_age_rules();
        } else {
            for (const auto &r : j) {
                c.age_rules.push_back({r.at("lo").get<int>(), r.at("hi").get<int>(), r.at("target_age").get<int>()});
            }
        }
    }
    if (doc.contains("exclusions")) {
        const auto &j = doc["exclusions"];
        if (j.is_string()) {
            if (j.get<std::string>() != "share_leakage") {
                throw ConfigurationError("unknown exclusion preset '" + j.get<std::string>() + "'");
            }
            c.exclusions = agents::share_leakage_exclusions();
        } else {
            const auto codes = j.at("items").get<std::vector<std::string>>();
            c.exclusions.item_codes = {codes.begin(), codes.end()};
            c.exclusions.reason = j.value("reason", "");
        }
    }
    if (doc.contains("demographics")) {
        const auto &j = doc["demographics"];
        if (j.is_string()) {
            if (j.get<std::string>() != "gss") {
                throw ConfigurationError("unknown demographics preset '" + j.get<std::string>() + "'");
            }
            c.demographics = fixtures::gss_demographics();
        } else {
            reject_unknown(j, {"gender", "employment", "marital_status", "income", "education_years"}, "demographics");
            c.demographics.gender = j.value("gender", c.demographics.gender);
            c.demographics.employment = j.value("employment", c.demographics.employment);
            c.demographics.marital_status = j.value("marital_status", c.demographics.marital_status);
            c.demographics.income = j.value("income", c.demographics.income);
            c.demographics.education_years = j.value("education_years", c.demographics.education_years);
        }
    }
    if (doc.contains("backend")) {
        const auto &j = doc["backend"];
        reject_unknown(j, {"kind", "policies", "endpoint"}, "backend");
        const auto kind = text::to_lower(j.value("kind", "mock"));
        if (kind == "mock") {
            c.backend.kind = BackendKind::mock;
        } else if (kind == "live") {
            c.backend.kind = BackendKind::live;
        } else {
            throw ConfigurationError("backend kind must be 'live' or 'mock'");
        }
        if (j.contains("policies")) {
            for (const auto &[key, p] : j["policies"].items()) {
                c.backend.policies.emplace(key, policy_from_json(p));
            }
        }
        if (j.contains("endpoint")) {
            c.backend.endpoint = parse_endpoint(j["endpoint"]);
        }
    }
    if (doc.contains("generation")) {
        c.generation = parse_generation(doc["generation"]);
    }
    c.runs = doc.value("runs", c.runs);
    if (c.runs == 0) {
        throw ConfigurationError("runs must be >= 1");
    }
    if (doc.contains("aggregation")) {
        c.aggregation = llm::aggregation_from_string(doc["aggregation"].get<std::string>());
    }
    c.workers = doc.value("workers", c.workers);
    c.max_failures = doc.value("max_failures", c.max_failures);
    c.seed = doc.value("seed", c.seed);
    c.tvd_bins = doc.value("tvd_bins", c.tvd_bins);
    if (c.tvd_bins == 0) {
        throw ConfigurationError("tvd_bins must be >= 1");
    }
    if (doc.contains("bootstrap")) {
        const auto &j = doc["bootstrap"];
        reject_unknown(j, {"enabled", "iterations", "confidence", "pairs"}, "bootstrap");
        c.bootstrap.enabled = j.value("enabled", true);
        c.bootstrap.iterations = j.value("iterations", c.bootstrap.iterations);
        c.bootstrap.confidence = j.value("confidence", c.bootstrap.confidence);
        if (j.contains("pairs")) {
            for (const auto &p : j["pairs"]) {
                c.bootstrap.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
            }
        }
    }
    if (doc.contains("forest")) {
        const auto &j = doc["forest"];
        reject_unknown(j, {"enabled", "n_estimators", "max_depth", "min_samples_split", "min_samples_leaf"}, "forest");
        c.forest.enabled = j.value("enabled", true);
        auto &g = c.forest.grid;
        g.n_estimators = j.value("n_estimators", g.n_estimators);
        g.max_depth = j.value("max_depth", g.max_depth);
        g.min_samples_split = j.value("min_samples_split", g.min_samples_split);
        g.min_samples_leaf = j.value("min_samples_leaf", g.min_samples_leaf);
    }
    if (doc.contains("age_bands")) {
        c.age_band_edges = doc["age_bands"].get<std::vector<int>>();
        if (c.age_band_edges.size() < 2 || !std::is_sorted(c.age_band_edges.begin(), c.age_band_edges.end())) {
            throw ConfigurationError("age_bands needs at least two ascending edges");
        }
    }
    if (doc.contains("scales")) {
        c.scales = parse_scales(doc["scales"]);
    }
    if (doc.contains("icc_strata")) {
        c.icc_strata = doc["icc_strata"].get<std::vector<std::string>>();
    }
    c.slope_band = doc.value("slope_band", c.slope_band);
    if (doc.contains("label_map")) {
        c.label_map = doc["label_map"].get<std::map<std::string, std::string>>();
    }
    if (doc.contains("output")) {
        c.output_dir = resolve(base, doc["output"]);
    }
    if (doc.contains("formats")) {
        c.formats.clear();
        for (const auto &f : doc["formats"]) {
            c.formats.insert(output_format_from_string(f.get<std::string>()));
        }
    }
    if (c.kind == StudyKind::regression && c.scales.empty()) {
        throw ConfigurationError("regression study needs 'scales'");
    }
    if (c.kind == StudyKind::country && c.references.fixture.empty() &&
        (c.references.instrument.empty() || c.references.distributions.empty())) {
        throw ConfigurationError("country study needs 'references' (fixture or instrument + distributions)");
    }
    return c;
}

} // namespace

StudyConfig parse_config(const json &doc, const std::filesystem::path &base_dir) {
    try {
        return parse_config_impl(doc, base_dir);
    } catch (const json::exception &e) {
        throw ConfigurationError(std::string("malformed study config: ") + e.what());
    }
}

StudyConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
    }
    return parse_config(doc, path.parent_path());
}

} // namespace surveysim::study
