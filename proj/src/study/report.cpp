#include "surveysim/study/report.hpp"

#include "internal.hpp"

#include "surveysim/common/csv.hpp"
#include "surveysim/common/errors.hpp"
#include "surveysim/common/text.hpp"

#include <nlohmann/json.hpp>

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace surveysim::study {

using nlohmann::json;
using detail::num;

std::optional<double> EvalReport::metric(const std::string &question, const std::string &condition,
                                         const std::string &name) const {
    for (const auto &m : metrics) {
        if (m.question == question && m.condition == condition && m.metric == name) {
            return m.value;
        }
    }
    return std::nullopt;
}

namespace {

json hp_json(const forest::Hyperparameters &hp) {
    return {{"n_estimators", hp.n_estimators},
            {"max_depth", hp.max_depth},
            {"min_samples_split", hp.min_samples_split},
            {"min_samples_leaf", hp.min_samples_leaf}};
}

json regression_json(const psychometrics::RegressionResult &r) {
    json terms = json::array();
    for (const auto &t : r.terms) {
        terms.push_back({{"name", t.name},
                         {"level", t.level},
                         {"b", t.b},
                         {"se", t.se},
                         {"beta", t.beta_std},
                         {"t", t.t},
                         {"p", t.p}});
    }
    json levels = json::array();
    for (const auto &l : r.levels) {
        levels.push_back({{"level", l.level}, {"r_squared", l.r_squared}, {"df", l.df}});
    }
    return {{"terms", terms},
            {"levels", levels},
            {"r_squared", r.r_squared},
            {"n", r.n},
            {"deleted", r.deleted},
            {"beta_convention", r.beta_convention}};
}

json slopes_json(const psychometrics::SimpleSlopesResult &s) {
    json cells = json::array();
    for (const auto &c : s.cells) {
        cells.push_back({{"ftp", c.ftp_level},
                         {"knowledge", c.knowledge_level},
                         {"b", c.b},
                         {"beta", c.beta},
                         {"se", c.se},
                         {"t", c.t},
                         {"p", c.p}});
    }
    return {{"cells", cells}, {"band", s.band}, {"n", s.n}};
}

} // namespace

json to_json(const EvalReport &r) {
    json j;
    j["study"] = to_string(r.kind);
    j["questions"] = r.questions;
    j["conditions"] = r.conditions;
    json metrics = json::array();
    for (const auto &m : r.metrics) {
        metrics.push_back(
            {{"question", m.question}, {"condition", m.condition}, {"metric", m.metric}, {"value", m.value}, {"n", m.n}});
    }
    j["metrics"] = metrics;
    json failures = json::array();
    for (const auto &f : r.failures) {
        failures.push_back({{"question", f.question}, {"condition", f.condition}, {"error", f.error}});
    }
    j["failures"] = failures;
    json diag = json::array();
    for (const auto &d : r.diagnostics) {
        diag.push_back({{"condition", d.condition},
                        {"tasks", d.tasks},
                        {"elicitations", d.elicitations},
                        {"unparseable", d.unparseable},
                        {"clipped", d.clipped},
                        {"skipped_profiles", d.skipped_profiles}});
    }
    j["diagnostics"] = diag;
    json boots = json::array();
    for (const auto &b : r.bootstraps) {
        const auto &x = b.result;
        boots.push_back({{"condition_a", b.condition_a},
                         {"condition_b", b.condition_b},
                         {"observed_delta_tvd", x.observed_delta_tvd},
                         {"mean_delta_tvd", x.mean_delta_tvd},
                         {"ci_low", x.ci_low},
                         {"ci_high", x.ci_high},
                         {"mean_tvd_a", x.mean_tvd_a},
                         {"mean_tvd_b", x.mean_tvd_b},
                         {"per_question_delta", x.per_question_delta},
                         {"significant", x.significant},
                         {"achieved_p", x.achieved_p},
                         {"iterations", x.iterations_used},
                         {"participants", x.participants},
                         {"questions", x.questions}});
    }
    j["bootstrap"] = boots;
    json pct = json::array();
    for (const auto &p : r.pct_changes) {
        pct.push_back({{"question", p.question},
                       {"condition_a", p.condition_a},
                       {"condition_b", p.condition_b},
                       {"tvd_a", p.tvd_a},
                       {"tvd_b", p.tvd_b},
                       {"pct_change", p.pct_change}});
    }
    j["pct_change"] = pct;
    json base = json::array();
    for (const auto &e : r.baselines) {
        base.push_back({{"question", e.target_code},
                        {"task", forest::to_string(e.task)},
                        {"metric", e.metric},
                        {"train", e.train_score},
                        {"test", e.test_score},
                        {"test_tvd", e.test_tvd},
                        {"n_train", e.n_train},
                        {"n_test", e.n_test},
                        {"hyperparameters", hp_json(e.hp)}});
    }
    j["baselines"] = base;
    json country = json::array();
    for (const auto &c : r.country_rows) {
        country.push_back({{"question", c.question},
                           {"country", c.country},
                           {"condition", c.condition},
                           {"option", c.option},
                           {"simulated", c.simulated},
                           {"reference", c.reference},
                           {"n", c.n}});
    }
    j["country"] = country;
    json reg = json::array();
    for (const auto &s : r.regression) {
        json alpha = json::object();
        for (const auto &[scale, a] : s.alpha) {
            alpha[scale] = {{"alpha_raw", a.alpha_raw},
                            {"alpha_std", a.alpha_std},
                            {"mean_inter_item_r", a.mean_inter_item_r},
                            {"mean_item_variance", a.mean_item_variance},
                            {"scale_variance", a.scale_variance},
                            {"k", a.k},
                            {"n", a.n}};
        }
        json entry{{"series", s.name},
                   {"agents", s.agents},
                   {"deleted", s.deleted},
                   {"alpha", alpha},
                   {"icc", s.icc},
                   {"item_entropy", s.item_entropy},
                   {"scale_entropy", s.scale_entropy},
                   {"scale_means", s.scale_means}};
        if (s.diversity) {
            entry["diversity"] = {{"unique_profiles", s.diversity->unique_profiles},
                                  {"total", s.diversity->total},
                                  {"ratio", s.diversity->ratio},
                                  {"top10_coverage", s.diversity->top10_coverage}};
        }
        entry["regression"] = s.regression ? regression_json(*s.regression) : json(nullptr);
        entry["simple_slopes"] = s.slopes ? slopes_json(*s.slopes) : json(nullptr);
        reg.push_back(entry);
    }
    j["regression"] = reg;
    return j;
}

namespace {

/// Collects files in memory, then writes them in one pass.
class Emitter {
  public:
    explicit Emitter(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::ostream &file(const std::string &rel) {
        auto [it, inserted] = files_.try_emplace(rel);
        return it->second;
    }

    void row(const std::string &rel, const std::vector<std::string> &fields) { csv::write_row(file(rel), fields); }

    std::vector<std::string> flush() {
        std::vector<std::string> written;
        for (auto &[rel, content] : files_) {
            const auto path = dir_ / rel;
            std::error_code ec;
            std::filesystem::create_directories(path.parent_path(), ec);
            if (ec) {
                throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
            }
            std::ofstream out(path, std::ios::binary);
            out << content.str();
            if (!out) {
                throw IoError("cannot write '" + path.string() + "'");
            }
            written.push_back(rel);
        }
        return written;
    }

  private:
    std::filesystem::path dir_;
    std::map<std::string, std::ostringstream> files_;
};

std::string pair_file(const std::string &dir, const std::string &q, const std::string &c) {
    return dir + "/" + text::slug(q) + "__" + text::slug(c) + ".csv";
}

std::string opt_num(const std::optional<double> &v) {
    return v ? num(*v) : "NA";
}

void emit_delimited(const EvalReport &r, Emitter &e) {
    auto &summary = e.file("summary.csv");
    metrics::write_metric_records(summary, r.metrics);

    e.row("failures.csv", {"question", "condition", "error"});
    for (const auto &f : r.failures) {
        e.row("failures.csv", {f.question, f.condition, f.error});
    }
    e.row("diagnostics.csv", {"condition", "tasks", "elicitations", "unparseable", "clipped", "skipped_profiles"});
    for (const auto &d : r.diagnostics) {
        e.row("diagnostics.csv", {d.condition, std::to_string(d.tasks), std::to_string(d.elicitations),
                                  std::to_string(d.unparseable), std::to_string(d.clipped),
                                  std::to_string(d.skipped_profiles)});
    }

    if (r.kind == StudyKind::individual) {
        // Question rows, one score/TVD column pair per condition.
        std::vector<std::string> header{"question"};
        std::vector<std::string> series = r.conditions;
        if (!r.baselines.empty()) {
            series.push_back(kForestSeries);
        }
        for (const auto &c : series) {
            header.push_back(c + "_score");
            header.push_back(c + "_tvd");
        }
        header.push_back("metric");
        e.row("fidelity_table.csv", header);
        for (const auto &q : r.questions) {
            std::vector<std::string> row{q};
            std::string metric_name = "NA";
            for (const auto &c : series) {
                auto score = r.metric(q, c, "weighted_f1");
                if (score) {
                    metric_name = "weighted_f1";
                } else if ((score = r.metric(q, c, "pearson"))) {
                    metric_name = "pearson";
                }
                row.push_back(opt_num(score));
                row.push_back(opt_num(r.metric(q, c, "tvd")));
            }
            row.push_back(metric_name);
            e.row("fidelity_table.csv", row);
        }
        if (!r.bootstraps.empty()) {
            e.row("bootstrap.csv", {"condition_a", "condition_b", "observed_delta_tvd", "mean_delta_tvd", "ci_low",
                                    "ci_high", "mean_tvd_a", "mean_tvd_b", "significant", "achieved_p", "iterations",
                                    "participants", "questions"});
            for (const auto &b : r.bootstraps) {
                const auto &x = b.result;
                e.row("bootstrap.csv",
                      {b.condition_a, b.condition_b, num(x.observed_delta_tvd), num(x.mean_delta_tvd), num(x.ci_low),
                       num(x.ci_high), num(x.mean_tvd_a), num(x.mean_tvd_b), x.significant ? "true" : "false",
                       num(x.achieved_p), std::to_string(x.iterations_used), std::to_string(x.participants),
                       std::to_string(x.questions)});
            }
        }
        if (!r.pct_changes.empty()) {
            e.row("pct_change.csv", {"question", "condition_a", "condition_b", "tvd_a", "tvd_b", "pct_change"});
            for (const auto &p : r.pct_changes) {
                e.row("pct_change.csv", {p.question, p.condition_a, p.condition_b, num(p.tvd_a), num(p.tvd_b),
                                         fmt::format("{:.1f}", p.pct_change)});
            }
        }
        if (!r.baselines.empty()) {
            e.row("baseline.csv", {"question", "task", "metric", "train", "test", "test_tvd", "n_train", "n_test",
                                   "n_estimators", "max_depth", "min_samples_split", "min_samples_leaf"});
            for (const auto &b : r.baselines) {
                e.row("baseline.csv",
                      {b.target_code, forest::to_string(b.task), b.metric, num(b.train_score), num(b.test_score),
                       num(b.test_tvd), std::to_string(b.n_train), std::to_string(b.n_test),
                       std::to_string(b.hp.n_estimators), std::to_string(b.hp.max_depth),
                       std::to_string(b.hp.min_samples_split), std::to_string(b.hp.min_samples_leaf)});
            }
        }
    }

    if (r.kind == StudyKind::country) {
        e.row("country.csv", {"question", "country", "condition", "option", "simulated_pct", "reference_pct", "n"});
        for (const auto &c : r.country_rows) {
            e.row("country.csv", {c.question, c.country, c.condition, c.option, num(100.0 * c.simulated),
                                  num(100.0 * c.reference), std::to_string(c.n)});
        }
    }

    if (r.kind == StudyKind::regression) {
        // Table-shaped: term rows, a b/beta/p column group per series.
        std::vector<std::string> header{"term", "level"};
        for (const auto &s : r.regression) {
            for (const char *col : {"_b", "_beta", "_se", "_p"}) {
                header.push_back(s.name + col);
            }
        }
        e.row("regression_table.csv", header);
        for (std::size_t t = 0; t < psychometrics::kTermNames.size(); ++t) {
            std::vector<std::string> row{psychometrics::kTermNames[t], std::to_string(t < 3 ? 1 : (t < 6 ? 2 : 3))};
            for (const auto &s : r.regression) {
                if (s.regression && t < s.regression->terms.size()) {
                    const auto &term = s.regression->terms[t];
                    row.insert(row.end(), {num(term.b), num(term.beta_std), num(term.se), num(term.p)});
                } else {
                    row.insert(row.end(), {"NA", "NA", "NA", "NA"});
                }
            }
            e.row("regression_table.csv", row);
        }
        std::vector<std::string> r2{"R squared", "3"};
        for (const auto &s : r.regression) {
            r2.insert(r2.end(), {s.regression ? num(s.regression->r_squared) : "NA", "", "", ""});
        }
        e.row("regression_table.csv", r2);

        e.row("simple_slopes.csv", {"series", "ftp", "knowledge", "b", "beta", "se", "t", "p"});
        e.row("reliability.csv", {"series", "scale", "alpha_raw", "alpha_std", "mean_inter_item_r",
                                  "mean_item_variance", "scale_variance", "icc1", "mean_score", "scale_entropy"});
        e.row("entropy.csv", {"series", "item", "entropy"});
        for (const auto &s : r.regression) {
            if (s.slopes) {
                for (const auto &c : s.slopes->cells) {
                    e.row("simple_slopes.csv", {s.name, c.ftp_level, c.knowledge_level, num(c.b), num(c.beta),
                                                num(c.se), num(c.t), num(c.p)});
                }
            }
            std::set<std::string> scales;
            for (const auto &[k, v] : s.scale_means) {
                scales.insert(k);
            }
            for (const auto &[k, v] : s.alpha) {
                scales.insert(k);
            }
            for (const auto &scale : scales) {
                const auto a = s.alpha.find(scale);
                const bool has = a != s.alpha.end();
                auto get = [&](const std::map<std::string, double> &m) {
                    auto it = m.find(scale);
                    return it == m.end() ? std::string("NA") : num(it->second);
                };
                e.row("reliability.csv",
                      {s.name, scale, has ? num(a->second.alpha_raw) : "NA", has ? num(a->second.alpha_std) : "NA",
                       has ? num(a->second.mean_inter_item_r) : "NA", has ? num(a->second.mean_item_variance) : "NA",
                       has ? num(a->second.scale_variance) : "NA", get(s.icc), get(s.scale_means),
                       get(s.scale_entropy)});
            }
            for (const auto &[item, v] : s.item_entropy) {
                e.row("entropy.csv", {s.name, item, num(v)});
            }
        }
    }
}

void emit_plot_data(const EvalReport &r, Emitter &e) {
    for (const auto &f : r.frequencies) {
        const auto rel = pair_file("plot/frequencies", f.question, f.condition);
        e.row(rel, {"label", kTruthSeries, f.condition});
        for (std::size_t i = 0; i < f.labels.size(); ++i) {
            e.row(rel, {f.labels[i], num(f.truth[i]), num(f.predicted[i])});
        }
    }
    for (const auto &d : r.densities) {
        const auto rel = pair_file("plot/densities", d.question, d.condition);
        e.row(rel, {"bin_low", "bin_high", kTruthSeries, d.condition});
        for (std::size_t i = 0; i < d.truth.size(); ++i) {
            e.row(rel, {num(d.edges[i]), num(d.edges[i + 1]), num(d.truth[i]), num(d.predicted[i])});
        }
    }
    if (!r.terciles.empty()) {
        e.row("plot/terciles.csv", {"question", "condition", "tercile", "mean_by_truth", "mean_by_prediction",
                                    "n_by_truth", "n_by_prediction"});
        for (const auto &t : r.terciles) {
            e.row("plot/terciles.csv", {t.question, t.condition, t.tercile, opt_num(t.mean_by_truth),
                                        opt_num(t.mean_by_prediction), std::to_string(t.n_by_truth),
                                        std::to_string(t.n_by_prediction)});
        }
    }
    if (!r.age_bands.empty()) {
        e.row("plot/age_means.csv", {"question", "series", "age_from", "age_to", "mean", "n"});
        for (const auto &a : r.age_bands) {
            e.row("plot/age_means.csv",
                  {a.question, a.series, std::to_string(a.lo), std::to_string(a.hi), opt_num(a.mean),
                   std::to_string(a.n)});
        }
    }
    for (const auto &c : r.country_rows) {
        const auto rel = pair_file("plot/country", c.question, c.condition);
        auto &out = e.file(rel);
        if (out.tellp() == 0) {
            csv::write_row(out, {"country", "option", "simulated", "reference"});
        }
        csv::write_row(out, {c.country, c.option, num(c.simulated), num(c.reference)});
    }
    if (!r.regression.empty()) {
        e.row("plot/entropy.csv", {"series", "item", "entropy"});
        e.row("plot/diversity.csv", {"series", "unique_profiles", "total", "ratio", "top10_coverage"});
        e.row("plot/icc.csv", {"series", "scale", "icc1"});
        e.row("plot/simple_slopes.csv", {"series", "ftp", "knowledge", "risk_z", "predicted_z"});
        for (const auto &s : r.regression) {
            for (const auto &[item, v] : s.item_entropy) {
                e.row("plot/entropy.csv", {s.name, item, num(v)});
            }
            if (s.diversity) {
                const auto &d = *s.diversity;
                e.row("plot/diversity.csv", {s.name, std::to_string(d.unique_profiles), std::to_string(d.total),
                                             num(d.ratio), num(d.top10_coverage)});
            }
            for (const auto &[scale, v] : s.icc) {
                e.row("plot/icc.csv", {s.name, scale, num(v)});
            }
            if (s.slopes) {
                // Standardized lines through the origin at risk = -1 SD and +1 SD.
                for (const auto &c : s.slopes->cells) {
                    for (double z : {-1.0, 1.0}) {
                        e.row("plot/simple_slopes.csv",
                              {s.name, c.ftp_level, c.knowledge_level, num(z), num(z * c.beta)});
                    }
                }
            }
        }
    }
    if (r.kind == StudyKind::individual) {
        // Entropy and diversity bars for the simulated populations.
        e.row("plot/population.csv", {"series", "metric", "value", "n"});
        for (const auto &m : r.metrics) {
            if (m.question == "*") {
                e.row("plot/population.csv", {m.condition, m.metric, num(m.value), std::to_string(m.n)});
            }
        }
    }
}

} // namespace

std::vector<std::string> emit_report(const EvalReport &report, const std::filesystem::path &dir,
                                     const std::set<OutputFormat> &formats) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'");
    }
    Emitter e(dir);
    if (formats.contains(OutputFormat::delimited)) {
        emit_delimited(report, e);
    }
    if (formats.contains(OutputFormat::structured)) {
        e.file("report.json") << to_json(report).dump(2) << '\n';
    }
    if (formats.contains(OutputFormat::plot_data)) {
        emit_plot_data(report, e);
    }
    return e.flush();
}

} // namespace surveysim::study
