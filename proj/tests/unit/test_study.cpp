#include <doctest.h>

#include "surveysim/common/errors.hpp"
#include "surveysim/corpus/io.hpp"
#include "surveysim/fixtures/synthetic.hpp"
#include "surveysim/study/study.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace surveysim;
using namespace surveysim::study;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string &name) {
    auto dir = fs::temp_directory_path() / ("surveysim_study_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::map<std::string, std::string> read_tree(const fs::path &dir) {
    std::map<std::string, std::string> out;
    for (const auto &e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            std::ifstream in(e.path(), std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            out[fs::relative(e.path(), dir).string()] = ss.str();
        }
    }
    return out;
}

std::map<std::string, std::string> emitted(const EvalReport &r, const std::string &name) {
    const auto dir = scratch(name);
    emit_report(r, dir, {OutputFormat::delimited, OutputFormat::structured, OutputFormat::plot_data});
    return read_tree(dir);
}

StudyConfig individual_config(std::size_t n = 150) {
    json doc = {
        {"study", "individual"},
        {"corpus", {{"fixture", "share_like"}, {"n", n}, {"fixture_seed", 7}}},
        {"conditions", {"demo7", "survey_anchored"}},
        {"targets",
         {{{"code", "FTP01"},
           {"mode", "continuous"},
           {"individualize_age", true},
           {"anchor_low", "you are certain you will not reach that age"},
           {"anchor_high", "you are certain you will live to that age or more."}},
          {{"code", "FTP03"}},
          {{"code", "FRT01"}},
          {{"code", "cf015_"}, {"correct_label", fixtures::kCompoundInterestAnswer}}}},
        {"age_rules", "share"},
        {"exclusions", "share_leakage"},
        {"backend", {{"kind", "mock"}, {"policies", {{"*", {{"policy", "echo_truth"}}}}}}},
        {"bootstrap", {{"iterations", 300}}},
        {"seed", 11},
        {"workers", 2},
    };
    return parse_config(doc);
}

} // namespace

TEST_CASE("config parsing and validation") {
    const auto c = individual_config();
    CHECK(c.kind == StudyKind::individual);
    CHECK(c.targets.size() == 4);
    CHECK(c.targets[0].mode == agents::ResponseMode::continuous_0_100);
    CHECK(c.age_rules.size() == 8);
    CHECK(c.exclusions.item_codes.contains("cf015_"));
    CHECK(c.bootstrap.iterations == 300);
    CHECK(c.tvd_bins == 50);
    CHECK(c.bootstrap_pairs() == std::vector<std::pair<std::string, std::string>>{{"demo7", "survey_anchored"}});

    CHECK_THROWS_AS(parse_config(json{{"study", "individual"}, {"corpus", {{"fixture", "share_like"}}}, {"bogus", 1}}),
                    ConfigurationError);
    CHECK_THROWS_AS(parse_config(json{{"study", "sideways"}, {"corpus", {{"fixture", "share_like"}}}}),
                    ConfigurationError);

    // Mock policy map must cover every (condition, target).
    auto partial = c;
    partial.backend.policies = {{"survey_anchored:*", llm::EchoTruth{}}};
    CHECK_THROWS_AS(plan_study(partial), ConfigurationError);
    auto unknown = c;
    unknown.targets.push_back({"NOPE"});
    CHECK_THROWS_AS(plan_study(unknown), ConfigurationError);

    for (const auto &p : {llm::MockPolicy{llm::CentralTendency{50, 5}}, llm::MockPolicy{llm::FixedLabel{"x"}},
                          llm::MockPolicy{llm::HyperAccurate{"2420", 0.9}}}) {
        CHECK(policy_from_json(policy_to_json(p)).index() == p.index());
    }
}

TEST_CASE("perfect mock gives zero TVD and perfect scores") {
    const auto out = run_individual_study(individual_config());
    for (const auto &q : {"FTP01", "FTP03", "FRT01", "cf015_"}) {
        for (const auto &c : {"demo7", "survey_anchored"}) {
            CAPTURE(q);
            CAPTURE(c);
            REQUIRE(out.report.metric(q, c, "tvd"));
            CHECK(*out.report.metric(q, c, "tvd") == doctest::Approx(0.0));
        }
    }
    CHECK(*out.report.metric("FTP01", "survey_anchored", "pearson") == doctest::Approx(1.0));
    CHECK(*out.report.metric("FTP03", "survey_anchored", "weighted_f1") == doctest::Approx(1.0));
    CHECK(*out.report.metric("cf015_", "demo7", "weighted_f1") == doctest::Approx(1.0));
    // Zero baseline TVD leaves percent change undefined; that is the only failure kind.
    CHECK(out.report.failures.size() == 4);
    for (const auto &f : out.report.failures) {
        CHECK(f.error.find("percent change undefined") != std::string::npos);
    }
    // Every configured pair has a metric or a failure entry.
    for (const auto &q : out.report.questions) {
        for (const auto &c : out.report.conditions) {
            const bool has = out.report.metric(q, c, "tvd").has_value();
            const bool failed = std::any_of(out.report.failures.begin(), out.report.failures.end(),
                                            [&](const auto &f) { return f.question == q && f.condition == c; });
            CHECK((has || failed));
        }
    }
}

TEST_CASE("central tendency against echo is flagged by the bootstrap") {
    auto cfg = individual_config(200);
    cfg.backend.policies = {{"demo7:*", llm::CentralTendency{50, 5}}, {"survey_anchored:*", llm::EchoTruth{}}};
    const auto out = run_individual_study(cfg);
    REQUIRE(out.report.bootstraps.size() == 1);
    const auto &b = out.report.bootstraps[0].result;
    CHECK(b.significant);
    CHECK(b.ci_low > 0.0);
    CHECK(b.observed_delta_tvd > 0.0);
    CHECK(*out.report.metric("FTP01", "demo7", "tail_tvd") > *out.report.metric("FTP01", "survey_anchored", "tail_tvd"));
    CHECK(*out.report.metric("FTP03", "demo7", "entropy") < *out.report.metric("FTP03", "survey_anchored", "entropy"));
    CHECK(out.report.pct_changes.size() == 4);
}

TEST_CASE("reports are byte-identical across runs and under replay") {
    auto cfg = individual_config(80);
    cfg.backend.policies = {{"demo7:*", llm::UniformRandom{}}, {"survey_anchored:*", llm::CentralTendency{60, 15}}};
    const auto a = run_individual_study(cfg);
    const auto b = run_individual_study(cfg);
    const auto files_a = emitted(a.report, "det_a");
    CHECK(files_a == emitted(b.report, "det_b"));
    CHECK(a.records == b.records);

    std::stringstream log;
    llm::write_prediction_log(log, a.records);
    const auto plan = plan_study(cfg);
    const auto replayed = replay_report(plan, llm::read_prediction_log(log));
    CHECK(files_a == emitted(replayed, "det_replay"));

    // Replay never reaches the mock: a backend with no policies would throw.
    CHECK(files_a.contains("summary.csv"));
    CHECK(files_a.contains("report.json"));
    CHECK(files_a.contains("plot/densities/FTP01__demo7.csv"));
    CHECK(files_a.contains("plot/frequencies/FRT01__survey_anchored.csv"));
    CHECK(files_a.contains("plot/terciles.csv"));
    CHECK(files_a.contains("plot/age_means.csv"));
    CHECK(files_a.contains("plot/population.csv"));
}

TEST_CASE("adding a condition leaves other conditions untouched") {
    auto one = individual_config(80);
    one.conditions = {agents::Condition::survey_anchored};
    one.backend.policies = {{"*", llm::CentralTendency{50, 20}}};
    auto two = one;
    two.conditions = {agents::Condition::demo3, agents::Condition::survey_anchored};
    const auto a = run_individual_study(one).report;
    const auto b = run_individual_study(two).report;
    std::size_t compared = 0;
    for (const auto &m : a.metrics) {
        if (m.condition == "survey_anchored") {
            REQUIRE(b.metric(m.question, m.condition, m.metric));
            CHECK(*b.metric(m.question, m.condition, m.metric) == m.value);
            ++compared;
        }
    }
    CHECK(compared > 10);
}

TEST_CASE("leakage audit finds nothing in a full fixture run") {
    auto cfg = individual_config(60);
    cfg.conditions = {agents::Condition::demo7, agents::Condition::demo3, agents::Condition::survey_anchored};
    const auto plan = plan_study(cfg);
    CHECK(plan.tasks.size() > 0);
    CHECK(leakage_audit(plan).empty());

    // A plan that forgets the exclusions is caught.
    auto leaky = cfg;
    leaky.exclusions = {};
    auto bad = plan_study(leaky);
    bad.config.exclusions = agents::share_leakage_exclusions();
    CHECK_FALSE(leakage_audit(bad).empty());
}

TEST_CASE("emit_report file layout and percent-change column") {
    EvalReport r;
    r.kind = StudyKind::individual;
    r.questions = {"FK01"};
    r.conditions = {"demo7", "survey_anchored"};
    r.metrics = {{"FK01", "demo7", "tvd", 0.581, 10}, {"FK01", "survey_anchored", "tvd", 0.374, 10}};
    for (const auto &c : r.conditions) {
        r.frequencies.push_back({"FK01", c, {"a", "b"}, {0.5, 0.5}, {0.25, 0.75}, 10, 10});
    }
    r.pct_changes.push_back({"FK01", "demo7", "survey_anchored", 0.581, 0.374, -35.628});
    const auto dir = scratch("layout");
    const auto files = emit_report(r, dir, {OutputFormat::delimited, OutputFormat::plot_data});
    CHECK(std::count(files.begin(), files.end(), "summary.csv") == 1);
    CHECK(std::count_if(files.begin(), files.end(),
                        [](const auto &f) { return f.rfind("plot/frequencies/", 0) == 0; }) == 2);
    const auto tree = read_tree(dir);
    CHECK(tree.at("pct_change.csv").find("-35.6\n") != std::string::npos);
    CHECK(tree.at("fidelity_table.csv").find("FK01,NA,0.581,NA,0.374") != std::string::npos);

    CHECK_THROWS_AS(emit_report(r, "/proc/surveysim-cannot-write", {OutputFormat::delimited}), IoError);
}

TEST_CASE("country study aligns options and reports TVD") {
    json doc = {{"study", "country"},
                {"corpus", {{"fixture", "share_like"}, {"n", 120}}},
                {"references", {{"fixture", "eurobarometer_like"}}},
                {"conditions", {"demo3", "survey_anchored"}},
                {"targets", {"EUBAR-FK02", "EUBAR-FTP02"}},
                {"backend",
                 {{"policies",
                   {{"EUBAR-FK02", {{"policy", "fixed_label"}, {"label", "Less than today"}}},
                    {"*", {{"policy", "uniform_random"}}}}}}}};
    auto cfg = parse_config(doc);
    auto plan = plan_study(cfg);
    // Reference uniform over the four EUBAR-FTP02 options and the three EUBAR-FK02 options.
    for (auto &ref : plan.references) {
        for (auto &f : ref.frequencies) {
            f.second = 1.0 / static_cast<double>(ref.frequencies.size());
        }
    }
    auto backend = make_backend(plan.config);
    const auto records = elicit(plan, *backend).records;
    const auto report = assemble_report(plan, records);
    for (const auto &country : {"Spain", "France", "Germany"}) {
        CHECK(*report.metric("EUBAR-FK02", "demo3", std::string("tvd:") + country) == doctest::Approx(2.0 / 3.0));
        CHECK(*report.metric("EUBAR-FTP02", "survey_anchored", std::string("tvd:") + country) < 0.25);
    }

    // Single option against a uniform reference over four options.
    auto four = plan;
    four.config.backend.policies = {{"*", llm::FixedLabel{"Very confident"}}};
    four.config.targets = {four.config.targets[1]};
    four.tasks.erase(std::remove_if(four.tasks.begin(), four.tasks.end(),
                                    [](const auto &t) { return t.item_code() != "EUBAR-FTP02"; }),
                     four.tasks.end());
    auto fixed = make_backend(four.config);
    const auto r4 = assemble_report(four, elicit(four, *fixed).records);
    CHECK(*r4.metric("EUBAR-FTP02", "demo3", "tvd:Spain") == doctest::Approx(0.75));

    // Simulated shares fed back as the reference: TVD 0.
    auto same = plan;
    for (auto &ref : same.references) {
        for (auto &f : ref.frequencies) {
            for (const auto &row : report.country_rows) {
                if (row.question == ref.item_code && row.country == ref.stratum && row.option == f.first &&
                    row.condition == "survey_anchored") {
                    f.second = row.simulated;
                }
            }
        }
    }
    same.config.conditions = {agents::Condition::survey_anchored};
    CHECK(*assemble_report(same, records).metric("EUBAR-FTP02", "survey_anchored", "tvd:France") ==
          doctest::Approx(0.0).epsilon(1e-12));

    auto mapped = plan;
    mapped.config.label_map = {{"Less than today", "Fewer"}};
    try {
        assemble_report(mapped, records);
        FAIL("expected a label mapping error");
    } catch (const LabelMappingError &e) {
        CHECK(e.unmatched() == std::vector<std::string>{"EUBAR-FK02: Fewer"});
    }
}

TEST_CASE("country study names the country without a reference") {
    const auto dir = scratch("coverage");
    {
        std::ofstream ins(dir / "items.jsonl");
        corpus::write_instrument(ins, fixtures::eurobarometer_like_instrument());
        std::ofstream refs(dir / "refs.csv");
        corpus::write_references(refs, fixtures::eurobarometer_like_references({"Spain", "France"}));
    }
    json doc = {{"study", "country"},
                {"corpus", {{"fixture", "share_like"}, {"n", 60}}},
                {"references", {{"instrument", (dir / "items.jsonl").string()}, {"distributions", (dir / "refs.csv").string()}}},
                {"backend", {{"policies", {{"*", {{"policy", "uniform_random"}}}}}}}};
    try {
        plan_study(parse_config(doc));
        FAIL("expected a coverage error");
    } catch (const CoverageError &e) {
        CHECK(std::string(e.what()).find("Germany") != std::string::npos);
    }
    doc["countries"] = {"Spain", "France"};
    CHECK(plan_study(parse_config(doc)).tasks.size() > 0);
}

TEST_CASE("regression study battery") {
    json doc = {{"study", "regression"},
                {"corpus", {{"fixture", "gss_like"}, {"n", 400}, {"fixture_seed", 3}}},
                {"scales", "retirement"},
                {"demographics", "gss"},
                {"exclusions", {{"items", fixtures::retirement_scales()[0].item_codes}}},
                {"conditions", {"demo7", "demo3", "survey_anchored"}},
                {"icc_strata", {"SEX", "MARITAL"}},
                {"backend",
                 {{"policies",
                   {{"demo7:*", {{"policy", "fixed_label"}, {"label", "4"}}},
                    {"*", {{"policy", "echo_truth"}}}}}}}};
    // Exclude all 22 scale items from the contexts.
    std::vector<std::string> all;
    for (const auto &s : fixtures::retirement_scales()) {
        all.insert(all.end(), s.item_codes.begin(), s.item_codes.end());
    }
    doc["exclusions"] = {{"items", all}};
    const auto out = run_regression_study(parse_config(doc));
    const auto &r = out.report;
    REQUIRE(r.regression.size() == 4);
    CHECK(r.regression[0].name == kTruthSeries);

    const auto &fixed = r.regression[1];
    CHECK(fixed.name == "demo7");
    CHECK_FALSE(fixed.regression.has_value());
    CHECK(fixed.scale_means.at("KFP") == 4.0);
    CHECK(fixed.item_entropy.at("KFP1") == 0.0);
    CHECK(fixed.diversity->ratio == doctest::Approx(1.0 / 400.0));
    const bool reported = std::any_of(r.failures.begin(), r.failures.end(), [](const auto &f) {
        return f.question == "regression" && f.condition == "demo7";
    });
    CHECK(reported);

    for (std::size_t s = 2; s < 4; ++s) {
        const auto &series = r.regression[s];
        REQUIRE(series.regression.has_value());
        const auto &t = series.regression->terms;
        CHECK(t[0].beta_std > t[1].beta_std);
        CHECK(t[0].beta_std > t[2].beta_std);
        CHECK(series.slopes.has_value());
        CHECK(series.alpha.at("RS").alpha_std > 0.8);
    }
    const auto files = emitted(r, "regression");
    const auto &table = files.at("regression_table.csv");
    CHECK(table.rfind("term,level,ground_truth_b,ground_truth_beta,ground_truth_se,ground_truth_p,demo7_b", 0) == 0);
    CHECK(files.contains("plot/simple_slopes.csv"));
    CHECK(files.contains("plot/icc.csv"));
    CHECK(files.contains("plot/entropy.csv"));
    CHECK(files.contains("plot/diversity.csv"));
    CHECK(files.contains("reliability.csv"));
}

namespace {

class DeadBackend : public llm::Backend {
  public:
    std::string complete(const llm::ElicitationTask &, std::size_t) override { throw TransportError("refused"); }
};

} // namespace

TEST_CASE("unreachable backend aborts and keeps the partial log") {
    auto cfg = individual_config(40);
    cfg.max_failures = 3;
    cfg.workers = 1;
    cfg.output_dir = scratch("abort");
    DeadBackend dead;
    CHECK_THROWS_AS(run_individual_study(cfg, &dead), BackendUnavailableError);
    CHECK(fs::exists(cfg.output_dir / "predictions.partial.jsonl"));
}
