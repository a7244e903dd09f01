#include "internal.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/inference/bootstrap.hpp"
#include "surveysim/llm/parse.hpp"
#include "surveysim/metrics/diversity.hpp"
#include "surveysim/metrics/fidelity.hpp"
#include "surveysim/metrics/tercile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace surveysim::study::detail {

using corpus::AnswerValue;
using corpus::MissingReason;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Same inclusion rules as the bootstrap so reported and resampled TVDs agree.
bool truth_counts(const AnswerValue &v, bool numeric) {
    if (numeric) {
        return v.is_numeric();
    }
    return v.is_categorical() ||
           (v.is_missing() && (v.reason() == MissingReason::refusal || v.reason() == MissingReason::dont_know));
}

bool prediction_counts(const AnswerValue &v, bool numeric) {
    return numeric ? v.is_numeric() : (v.is_categorical() || v.is_missing());
}

/// One question's answers aligned over the participant list.
struct Column {
    const corpus::SurveyItem *item = nullptr;
    std::vector<std::optional<AnswerValue>> truth;
    std::map<std::string, std::vector<std::optional<AnswerValue>>> predicted;
};

/// Mass outside the central 80% of bins (at least one bin per side).
double tail_tvd(const std::vector<double> &p, const std::vector<double> &q) {
    const std::size_t k = p.size();
    if (k < 2) {
        return 0.0;
    }
    const std::size_t tail = std::max<std::size_t>(1, k / 10);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (i < tail || i >= k - tail) {
            sum += std::fabs(p[i] - q[i]);
        }
    }
    return sum / 2.0;
}

std::vector<double> shares(const std::vector<std::size_t> &counts) {
    std::size_t total = 0;
    for (auto c : counts) {
        total += c;
    }
    std::vector<double> out(counts.size(), 0.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out[i] = total ? static_cast<double>(counts[i]) / static_cast<double>(total) : 0.0;
    }
    return out;
}

std::optional<double> mean_of(const std::vector<double> &v) {
    if (v.empty()) {
        return std::nullopt;
    }
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

class IndividualAssembler {
  public:
    IndividualAssembler(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records, EvalReport &report)
        : plan_(plan), cfg_(plan.config), report_(report), conditions_(condition_names(plan.config)) {
        for (const auto &r : plan.corpus.respondents) {
            participants_.push_back(r.respondent_id);
        }
        const auto finals = final_predictions(records);
        for (const auto &spec : cfg_.targets) {
            Column col;
            col.item = &plan.target_items.at(spec.code);
            for (const auto &r : plan.corpus.respondents) {
                const auto *a = r.find(spec.code);
                col.truth.push_back(a ? std::optional<AnswerValue>(*a) : std::nullopt);
                for (const auto &c : conditions_) {
                    auto it = finals.find({r.respondent_id, spec.code, c});
                    col.predicted[c].push_back(it == finals.end() ? std::nullopt
                                                                  : std::optional<AnswerValue>(it->second));
                }
            }
            columns_.push_back(std::move(col));
        }
    }

    void run() {
        for (std::size_t k = 0; k < columns_.size(); ++k) {
            question(cfg_.targets[k], columns_[k]);
        }
        population_diversity();
        bootstrap();
        if (cfg_.forest.enabled) {
            baselines();
        }
    }

  private:
    void metric(const std::string &q, const std::string &c, const std::string &m, double v, std::size_t n) {
        report_.metrics.push_back({q, c, m, v, n});
    }

    void fail(const std::string &q, const std::string &c, const std::string &what) {
        report_.failures.push_back({q, c, what});
    }

    static std::vector<std::string> labels_of(const std::vector<std::optional<AnswerValue>> &col,
                                              bool truth_side) {
        std::vector<std::string> out;
        for (const auto &v : col) {
            if (v && (truth_side ? truth_counts(*v, false) : prediction_counts(*v, false))) {
                out.push_back(v->display());
            }
        }
        return out;
    }

    static std::vector<double> numbers_of(const std::vector<std::optional<AnswerValue>> &col) {
        std::vector<double> out;
        for (const auto &v : col) {
            if (v && v->is_numeric()) {
                out.push_back(v->number());
            }
        }
        return out;
    }

    double entropy(const Column &col, const std::vector<std::optional<AnswerValue>> &values, bool truth_side) const {
        if (col.item->is_numeric()) {
            const auto xs = numbers_of(values);
            return xs.empty() ? kNaN : metrics::item_entropy(std::span<const double>(xs));
        }
        const auto ls = labels_of(values, truth_side);
        return ls.empty() ? kNaN : metrics::item_entropy(std::span<const std::string>(ls));
    }

    double correct_share(const std::vector<std::optional<AnswerValue>> &values, const std::string &label,
                         bool truth_side, std::size_t &n) const {
        std::size_t hits = 0;
        n = 0;
        for (const auto &v : values) {
            if (v && (truth_side ? truth_counts(*v, false) : prediction_counts(*v, false))) {
                ++n;
                hits += v->is_categorical() && v->label() == label;
            }
        }
        return n ? static_cast<double>(hits) / static_cast<double>(n) : kNaN;
    }

    void question(const TargetSpec &spec, const Column &col) {
        const auto &q = spec.code;
        const bool numeric = col.item->is_numeric();
        inference::QuestionData data{q, numeric, col.truth, col.predicted};
        std::vector<std::size_t> rows(participants_.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i] = i;
        }

        const double truth_entropy = entropy(col, col.truth, true);
        metric(q, kTruthSeries, "entropy", truth_entropy, numeric ? numbers_of(col.truth).size()
                                                                 : labels_of(col.truth, true).size());
        if (!spec.correct_label.empty()) {
            std::size_t n = 0;
            const double share = correct_share(col.truth, spec.correct_label, true, n);
            metric(q, kTruthSeries, "correct_share", share, n);
        }
        if (numeric) {
            age_means(q, kTruthSeries, col.truth);
        }

        for (const auto &c : conditions_) {
            const auto &pred = col.predicted.at(c);
            const auto tvd = inference::question_tvd(data, c, rows, cfg_.tvd_bins);
            if (!tvd) {
                fail(q, c, "no participant has both a ground-truth answer and a usable prediction");
                continue;
            }
            std::vector<std::string> tl, pl;
            std::vector<double> tx, px;
            for (std::size_t i = 0; i < participants_.size(); ++i) {
                if (!col.truth[i] || !pred[i]) {
                    continue;
                }
                if (numeric && col.truth[i]->is_numeric() && pred[i]->is_numeric()) {
                    tx.push_back(col.truth[i]->number());
                    px.push_back(pred[i]->number());
                } else if (!numeric && truth_counts(*col.truth[i], false) && prediction_counts(*pred[i], false)) {
                    tl.push_back(col.truth[i]->display());
                    pl.push_back(pred[i]->display());
                }
            }
            const std::size_t n = numeric ? tx.size() : tl.size();
            metric(q, c, "tvd", *tvd, n);
            const std::string score_name = numeric ? "pearson" : "weighted_f1";
            try {
                const double score = numeric ? metrics::pearson(tx, px) : metrics::weighted_f1(tl, pl);
                metric(q, c, score_name, score, n);
            } catch (const Error &e) {
                fail(q, c, score_name + ": " + e.what());
            }
            metric(q, c, "entropy", entropy(col, pred, false),
                   numeric ? numbers_of(pred).size() : labels_of(pred, false).size());
            if (!spec.correct_label.empty()) {
                std::size_t m = 0;
                const double share = correct_share(pred, spec.correct_label, false, m);
                metric(q, c, "correct_share", share, m);
            }
            std::size_t unparseable = 0, asked = 0;
            for (const auto &v : pred) {
                if (v) {
                    ++asked;
                    unparseable += v->is_missing() && v->reason() == MissingReason::unparseable;
                }
            }
            metric(q, c, "unparseable_rate", asked ? static_cast<double>(unparseable) / static_cast<double>(asked) : 0.0,
                   asked);

            if (numeric) {
                density(q, c, col, pred, n);
                terciles(q, c, *col.item, tx, px);
                age_means(q, c, pred);
            } else {
                frequency(q, c, col, pred);
            }
        }
    }

    void frequency(const std::string &q, const std::string &c, const Column &col,
                   const std::vector<std::optional<AnswerValue>> &pred) {
        FrequencyTable t{q, c, col.item->options(), {}, {}, 0, 0};
        auto index_of = [&](const std::string &label) {
            auto it = std::find(t.labels.begin(), t.labels.end(), label);
            if (it == t.labels.end()) {
                t.labels.push_back(label);
                return t.labels.size() - 1;
            }
            return static_cast<std::size_t>(it - t.labels.begin());
        };
        std::vector<std::size_t> tc, pc;
        auto bump = [&](std::vector<std::size_t> &counts, std::size_t i) {
            counts.resize(std::max(counts.size(), t.labels.size()), 0);
            ++counts[i];
        };
        for (const auto &label : labels_of(col.truth, true)) {
            bump(tc, index_of(label));
        }
        for (const auto &label : labels_of(pred, false)) {
            bump(pc, index_of(label));
        }
        tc.resize(t.labels.size(), 0);
        pc.resize(t.labels.size(), 0);
        for (auto v : tc) {
            t.n_truth += v;
        }
        for (auto v : pc) {
            t.n_predicted += v;
        }
        t.truth = shares(tc);
        t.predicted = shares(pc);
        // Ordinal tails: first and last option.
        metric(q, c, "tail_tvd", tail_tvd(t.truth, t.predicted), t.n_predicted);
        report_.frequencies.push_back(std::move(t));
    }

    void density(const std::string &q, const std::string &c, const Column &col,
                 const std::vector<std::optional<AnswerValue>> &pred, std::size_t n) {
        const auto tx = numbers_of(col.truth);
        const auto px = numbers_of(pred);
        if (tx.empty() || px.empty()) {
            return;
        }
        const auto [tlo, thi] = std::minmax_element(tx.begin(), tx.end());
        const auto [plo, phi] = std::minmax_element(px.begin(), px.end());
        const double lo = std::min(*tlo, *plo);
        double hi = std::max(*thi, *phi);
        if (hi == lo) {
            hi = lo + 1.0;
        }
        DensityTable d{q, c, metrics::equal_width_edges(lo, hi, cfg_.tvd_bins), {}, {}};
        auto histogram = [&](const std::vector<double> &xs) {
            std::vector<std::size_t> counts(cfg_.tvd_bins, 0);
            for (double x : xs) {
                ++counts[metrics::bin_index(x, d.edges)];
            }
            return shares(counts);
        };
        d.truth = histogram(tx);
        d.predicted = histogram(px);
        metric(q, c, "tail_tvd", tail_tvd(d.truth, d.predicted), n);
        report_.densities.push_back(std::move(d));
    }

    void terciles(const std::string &q, const std::string &c, const corpus::SurveyItem &item,
                  const std::vector<double> &tx, const std::vector<double> &px) {
        std::vector<double> tp, pp;
        for (std::size_t i = 0; i < tx.size(); ++i) {
            tp.push_back(llm::to_percent_scale(tx[i], item.range()));
            pp.push_back(llm::to_percent_scale(px[i], item.range()));
        }
        for (const auto &row : metrics::tercile_mean_validation(tp, pp)) {
            report_.terciles.push_back({q, c, metrics::to_string(row.category), row.mean_by_truth,
                                        row.mean_by_prediction, row.n_by_truth, row.n_by_prediction});
        }
    }

    void age_means(const std::string &q, const std::string &series,
                   const std::vector<std::optional<AnswerValue>> &values) {
        const auto &edges = cfg_.age_band_edges;
        for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
            std::vector<double> xs;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const int age = plan_.corpus.respondents[i].age;
                if (age >= edges[b] && age < edges[b + 1] && values[i] && values[i]->is_numeric()) {
                    xs.push_back(values[i]->number());
                }
            }
            report_.age_bands.push_back({q, series, edges[b], edges[b + 1], mean_of(xs), xs.size()});
        }
    }

    /// Response-vector diversity over all targets for each series.
    void population_diversity() {
        std::vector<std::string> series{kTruthSeries};
        series.insert(series.end(), conditions_.begin(), conditions_.end());
        for (const auto &s : series) {
            std::vector<Eigen::Index> complete;
            for (std::size_t i = 0; i < participants_.size(); ++i) {
                bool ok = true;
                for (const auto &col : columns_) {
                    const auto &v = s == kTruthSeries ? col.truth[i] : col.predicted.at(s)[i];
                    ok = ok && v.has_value();
                }
                if (ok) {
                    complete.push_back(static_cast<Eigen::Index>(i));
                }
            }
            if (complete.empty()) {
                fail("*", s, "no participant has an answer to every target");
                continue;
            }
            Eigen::MatrixXd m(static_cast<Eigen::Index>(complete.size()), static_cast<Eigen::Index>(columns_.size()));
            double entropy_sum = 0.0;
            std::size_t entropy_n = 0;
            for (std::size_t k = 0; k < columns_.size(); ++k) {
                const auto &col = columns_[k];
                const auto &values = s == kTruthSeries ? col.truth : col.predicted.at(s);
                std::map<std::string, double> codes;
                for (Eigen::Index r = 0; r < m.rows(); ++r) {
                    const auto &v = *values[static_cast<std::size_t>(complete[static_cast<std::size_t>(r)])];
                    double code;
                    if (v.is_numeric()) {
                        code = v.number();
                    } else {
                        code = codes.try_emplace(v.display(), static_cast<double>(codes.size())).first->second;
                    }
                    m(r, static_cast<Eigen::Index>(k)) = code;
                }
                const double e = entropy(col, values, s == kTruthSeries);
                if (!std::isnan(e)) {
                    entropy_sum += e;
                    ++entropy_n;
                }
            }
            const auto d = metrics::profile_diversity(m);
            metric("*", s, "diversity_ratio", d.ratio, d.total);
            metric("*", s, "top10_coverage", d.top10_coverage, d.total);
            metric("*", s, "unique_profiles", static_cast<double>(d.unique_profiles), d.total);
            if (entropy_n) {
                metric("*", s, "mean_item_entropy", entropy_sum / static_cast<double>(entropy_n), entropy_n);
            }
        }
    }

    void bootstrap() {
        if (!cfg_.bootstrap.enabled) {
            return;
        }
        inference::Panel panel;
        panel.participants = participants_;
        for (std::size_t k = 0; k < columns_.size(); ++k) {
            panel.questions.push_back(
                {cfg_.targets[k].code, columns_[k].item->is_numeric(), columns_[k].truth, columns_[k].predicted});
        }
        for (const auto &[a, b] : cfg_.bootstrap_pairs()) {
            const auto label = a + " vs " + b;
            if (std::find(conditions_.begin(), conditions_.end(), a) == conditions_.end() ||
                std::find(conditions_.begin(), conditions_.end(), b) == conditions_.end()) {
                fail("*", label, "bootstrap pair names a condition that was not run");
                continue;
            }
            inference::BootstrapConfig bc;
            bc.iterations = cfg_.bootstrap.iterations;
            bc.confidence = cfg_.bootstrap.confidence;
            bc.seed = derived_seed(cfg_, "bootstrap", label);
            bc.workers = cfg_.workers;
            bc.k_bins = cfg_.tvd_bins;
            try {
                auto result = inference::participant_bootstrap(panel, a, b, bc);
                report_.bootstraps.push_back({a, b, std::move(result)});
            } catch (const Error &e) {
                fail("*", label, std::string("bootstrap: ") + e.what());
            }
            for (const auto &q : cfg_.targets) {
                const auto ta = report_.metric(q.code, a, "tvd");
                const auto tb = report_.metric(q.code, b, "tvd");
                if (!ta || !tb) {
                    continue;
                }
                if (*ta == 0.0) {
                    fail(q.code, label, "percent change undefined: baseline TVD is 0");
                    continue;
                }
                report_.pct_changes.push_back({q.code, a, b, *ta, *tb, metrics::pct_change(*ta, *tb)});
            }
        }
    }

    void baselines() {
        for (const auto &spec : cfg_.targets) {
            const auto &q = spec.code;
            try {
                forest::PreprocessOptions po;
                po.excluded_items = cfg_.exclusions.item_codes;
                po.seed = derived_seed(cfg_, "forest-split", q);
                const auto prepared = forest::preprocess(plan_.corpus, q, po);
                const auto search = forest::grid_search_train(prepared.matrix, prepared.split, cfg_.forest.grid,
                                                              derived_seed(cfg_, "forest", q), cfg_.workers);
                auto eval = forest::evaluate(search.best, prepared.matrix, prepared.split);
                metric(q, kForestSeries, eval.metric, eval.test_score, eval.n_test);
                metric(q, kForestSeries, "train_" + eval.metric, eval.train_score, eval.n_train);
                metric(q, kForestSeries, "tvd", eval.test_tvd, eval.n_test);
                if (!eval.test_defined) {
                    fail(q, kForestSeries, eval.metric + " undefined on the test split");
                }
                report_.baselines.push_back(std::move(eval));
            } catch (const Error &e) {
                fail(q, kForestSeries, e.what());
            }
        }
    }

    const StudyPlan &plan_;
    const StudyConfig &cfg_;
    EvalReport &report_;
    std::vector<std::string> conditions_;
    std::vector<std::string> participants_;
    std::vector<Column> columns_;
};

} // namespace

void assemble_individual(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records,
                         EvalReport &report) {
    IndividualAssembler(plan, records, report).run();
}

} // namespace surveysim::study::detail
