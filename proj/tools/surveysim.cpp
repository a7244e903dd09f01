#include "surveysim/common/errors.hpp"
#include "surveysim/corpus/io.hpp"
#include "surveysim/study/study.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace surveysim;
using namespace surveysim::study;

namespace {

struct GlobalOptions {
    fs::path config;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::optional<std::string> backend;
    std::optional<std::size_t> runs;
    std::optional<std::string> aggregate;
    fs::path predictions;
};

StudyConfig resolve(const GlobalOptions &g) {
    auto cfg = load_config(g.config);
    if (g.seed) {
        cfg.seed = *g.seed;
    }
    if (g.out) {
        cfg.output_dir = *g.out;
    }
    if (g.backend) {
        cfg.backend.kind = *g.backend == "live" ? BackendKind::live : BackendKind::mock;
    }
    if (g.runs) {
        cfg.runs = *g.runs;
    }
    if (g.aggregate) {
        cfg.aggregation = *g.aggregate == "majority" ? llm::Aggregation::majority_vote : llm::Aggregation::single;
    }
    if (cfg.output_dir.empty()) {
        cfg.output_dir = "surveysim-out";
    }
    fs::create_directories(cfg.output_dir);
    return cfg;
}

fs::path predictions_path(const GlobalOptions &g, const StudyConfig &cfg) {
    return g.predictions.empty() ? cfg.output_dir / "predictions.jsonl" : g.predictions;
}

std::ofstream open_out(const fs::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

std::vector<llm::PredictionRecord> read_log(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read prediction log " + path.string());
    }
    return llm::read_prediction_log(in);
}

void write_log(const fs::path &path, const std::vector<llm::PredictionRecord> &records) {
    auto out = open_out(path);
    llm::write_prediction_log(out, records);
}

void emit(const EvalReport &report, const StudyConfig &cfg) {
    const auto files = emit_report(report, cfg.output_dir, cfg.formats);
    fmt::print("wrote {} report files to {}\n", files.size(), cfg.output_dir.string());
}

void print_bootstraps(const EvalReport &report) {
    for (const auto &b : report.bootstraps) {
        const auto &r = b.result;
        fmt::print("{} vs {}: delta TVD {:.4f} [{:.4f}, {:.4f}] p={:.4f} {} ({} participants, {} iterations)\n",
                   b.condition_a, b.condition_b, r.observed_delta_tvd, r.ci_low, r.ci_high, r.achieved_p,
                   r.significant ? "significant" : "not significant", r.participants, r.iterations_used);
    }
}

int cmd_ingest(const GlobalOptions &g) {
    const auto cfg = resolve(g);
    const auto plan = plan_study(cfg);
    corpus::save_corpus(plan.corpus, cfg.output_dir / "instrument.jsonl", cfg.output_dir / "respondents.csv",
                        corpus::RespondentFormat::delimited_table);
    fmt::print("{} respondents, {} items\n", plan.corpus.respondents.size(), plan.corpus.instrument.items().size());
    return 0;
}

int cmd_build_agents(const GlobalOptions &g) {
    const auto cfg = resolve(g);
    const auto plan = plan_study(cfg);
    auto out = open_out(cfg.output_dir / "prompts.jsonl");
    for (const auto &t : plan.tasks) {
        nlohmann::json j = {{"respondent_id", t.respondent_id()},
                            {"item_code", t.item_code()},
                            {"condition", agents::to_string(t.profile.condition)},
                            {"system", t.bundle.system_text},
                            {"user", t.bundle.user_text}};
        out << j.dump() << '\n';
    }
    for (const auto &[condition, n] : plan.skipped_profiles) {
        fmt::print("{}: skipped {} incomplete profiles\n", condition, n);
    }
    const auto hits = leakage_audit(plan);
    for (const auto &h : hits) {
        fmt::print(stderr, "leak: {}\n", h);
    }
    fmt::print("{} prompts, {} leakage hits\n", plan.tasks.size(), hits.size());
    return hits.empty() ? 0 : 3;
}

int cmd_simulate(const GlobalOptions &g) {
    const auto cfg = resolve(g);
    const auto plan = plan_study(cfg);
    auto backend = make_backend(plan.config);
    const auto result = elicit(plan, *backend);
    write_log(predictions_path(g, cfg), result.records);
    const auto &d = result.diagnostics;
    fmt::print("{} tasks, {} elicitations, {} unparseable, {} clipped, {} transport failures\n", d.tasks,
               d.elicitations, d.unparseable, d.clipped, d.transport_failures);
    return 0;
}

int cmd_evaluate(const GlobalOptions &g) {
    const auto cfg = resolve(g);
    const auto plan = plan_study(cfg);
    const auto report = assemble_report(plan, read_log(predictions_path(g, cfg)));
    emit(report, cfg);
    return 0;
}

int cmd_bootstrap(const GlobalOptions &g) {
    auto cfg = resolve(g);
    if (cfg.kind != StudyKind::individual) {
        throw ConfigurationError("bootstrap needs an individual study");
    }
    cfg.bootstrap.enabled = true;
    cfg.forest.enabled = false;
    const auto plan = plan_study(cfg);
    const auto report = assemble_report(plan, read_log(predictions_path(g, cfg)));
    print_bootstraps(report);
    return 0;
}

int cmd_regress(const GlobalOptions &g) {
    const auto cfg = resolve(g);
    if (cfg.kind != StudyKind::regression) {
        throw ConfigurationError("regress needs a regression study");
    }
    const auto plan = plan_study(cfg);
    const auto path = predictions_path(g, cfg);
    std::vector<llm::PredictionRecord> records;
    if (fs::exists(path)) {
        records = read_log(path);
    } else {
        auto backend = make_backend(plan.config);
        records = elicit(plan, *backend).records;
        write_log(path, records);
    }
    const auto report = assemble_report(plan, records);
    for (const auto &s : report.regression) {
        if (!s.regression) {
            fmt::print("{}: no regression\n", s.name);
            continue;
        }
        for (const auto &t : s.regression->terms) {
            fmt::print("{} {}: b={:.3f} beta={:.3f} se={:.3f} p={:.4f}\n", s.name, t.name, t.b, t.beta_std, t.se, t.p);
        }
    }
    emit(report, cfg);
    return 0;
}

int cmd_report(const GlobalOptions &g) {
    const auto cfg = resolve(g);
    const auto plan = plan_study(cfg);
    auto backend = make_backend(plan.config);
    const auto records = elicit(plan, *backend).records;
    write_log(predictions_path(g, cfg), records);
    const auto report = assemble_report(plan, records);
    print_bootstraps(report);
    emit(report, cfg);
    return 0;
}

int cmd_replay(const GlobalOptions &g) {
    const auto cfg = resolve(g);
    const auto plan = plan_study(cfg);
    const auto report = replay_report(plan, read_log(predictions_path(g, cfg)));
    emit(report, cfg);
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Simulate survey respondents with language-model agents and score them against the survey"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config, "Study configuration (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { g.seed = v; }, "Base seed");
    app.add_option_function<std::string>("--out", [&](const std::string &v) { g.out = v; }, "Output directory");
    app.add_option_function<std::string>("--backend", [&](const std::string &v) { g.backend = v; },
                                         "live or mock")
        ->check(CLI::IsMember({"live", "mock"}));
    app.add_option_function<std::size_t>("--runs", [&](std::size_t v) { g.runs = v; }, "Runs per task")
        ->check(CLI::PositiveNumber);
    app.add_option_function<std::string>("--aggregate", [&](const std::string &v) { g.aggregate = v; },
                                         "single or majority")
        ->check(CLI::IsMember({"single", "majority"}));

    const std::vector<std::tuple<std::string, std::string, int (*)(const GlobalOptions &)>> commands{
        {"ingest", "Load, filter and sample the corpus; write it back normalized", cmd_ingest},
        {"build-agents", "Render every prompt and audit contexts for leakage", cmd_build_agents},
        {"simulate", "Elicit answers and write the prediction log", cmd_simulate},
        {"evaluate", "Score a prediction log and write the report", cmd_evaluate},
        {"bootstrap", "Participant bootstrap of TVD differences from a prediction log", cmd_bootstrap},
        {"regress", "Scale scoring, diagnostics and hierarchical regression", cmd_regress},
        {"report", "Plan, elicit, evaluate and write every output", cmd_report},
        {"replay", "Rebuild the report from a prediction log without any backend", cmd_replay},
    };
    int (*selected)(const GlobalOptions &) = nullptr;
    for (const auto &[name, help, fn] : commands) {
        auto *sub = app.add_subcommand(name, help);
        if (name != "ingest" && name != "build-agents" && name != "report") {
            sub->add_option("--predictions", g.predictions, "Prediction log (default <out>/predictions.jsonl)");
        }
        sub->callback([&selected, fn = fn] { selected = fn; });
    }

    CLI11_PARSE(app, argc, argv);
    try {
        return selected(g);
    } catch (const BackendUnavailableError &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 4;
    } catch (const Error &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    } catch (const std::exception &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
}
