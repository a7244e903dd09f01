#include "internal.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/metrics/diversity.hpp"
#include "surveysim/metrics/reliability.hpp"

#include <cmath>
#include <limits>

namespace surveysim::study::detail {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> scale_items(const std::vector<psychometrics::ScaleDefinition> &scales) {
    std::vector<std::string> out;
    for (const auto &s : scales) {
        out.insert(out.end(), s.item_codes.begin(), s.item_codes.end());
    }
    return out;
}

/// ICC groups: the joined answers to the strata items; respondents missing any are left out.
std::vector<std::optional<std::string>> strata_keys(const StudyPlan &plan) {
    auto items = plan.config.icc_strata;
    if (items.empty()) {
        items = {plan.config.demographics.gender, plan.config.demographics.marital_status};
    }
    std::vector<std::optional<std::string>> out;
    for (const auto &r : plan.corpus.respondents) {
        std::string key;
        bool ok = true;
        for (const auto &code : items) {
            const auto *a = r.find(code);
            if (a == nullptr || a->is_missing()) {
                ok = false;
                break;
            }
            key += (key.empty() ? "" : " | ") + a->display();
        }
        out.push_back(ok ? std::optional<std::string>(key) : std::nullopt);
    }
    return out;
}

class RegressionAssembler {
  public:
    RegressionAssembler(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records, EvalReport &report)
        : plan_(plan), cfg_(plan.config), report_(report), finals_(final_predictions(records)),
          items_(scale_items(plan.config.scales)), strata_(strata_keys(plan)) {}

    void run() {
        report_.regression.push_back(series(kTruthSeries));
        for (const auto &c : report_.conditions) {
            report_.regression.push_back(series(c));
        }
    }

  private:
    void metric(const std::string &q, const std::string &c, const std::string &m, double v, std::size_t n) {
        report_.metrics.push_back({q, c, m, v, n});
    }

    void fail(const std::string &q, const std::string &c, const std::string &what) {
        report_.failures.push_back({q, c, what});
    }

    psychometrics::ResponseMatrix responses(const std::string &name) const {
        psychometrics::ResponseMatrix m;
        m.item_codes = items_;
        const auto &people = plan_.corpus.respondents;
        m.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(people.size()),
                                             static_cast<Eigen::Index>(items_.size()), kNaN);
        for (std::size_t i = 0; i < people.size(); ++i) {
            m.agent_ids.push_back(people[i].respondent_id);
            for (std::size_t j = 0; j < items_.size(); ++j) {
                const corpus::AnswerValue *v = nullptr;
                if (name == kTruthSeries) {
                    v = people[i].find(items_[j]);
                } else if (auto it = finals_.find({people[i].respondent_id, items_[j], name}); it != finals_.end()) {
                    v = &it->second;
                }
                if (v != nullptr && v->is_numeric()) {
                    m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v->number();
                }
            }
        }
        return m;
    }

    /// Reverse-coded item block of one scale, complete rows only.
    static Eigen::MatrixXd scale_block(const psychometrics::ResponseMatrix &m,
                                       const psychometrics::ScaleDefinition &s, std::size_t offset) {
        std::vector<Eigen::Index> rows;
        const auto k = static_cast<Eigen::Index>(s.item_codes.size());
        for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
            if (!m.values.row(r).segment(static_cast<Eigen::Index>(offset), k).array().isNaN().any()) {
                rows.push_back(r);
            }
        }
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), k);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
                const double raw = m.values(rows[i], static_cast<Eigen::Index>(offset) + j);
                out(static_cast<Eigen::Index>(i), j) =
                    s.reverse_flags[static_cast<std::size_t>(j)] ? psychometrics::reverse_code(raw, s.scale_min, s.scale_max)
                                                                 : raw;
            }
        }
        return out;
    }

    RegressionSeries series(const std::string &name) {
        RegressionSeries out;
        out.name = name;
        const auto m = responses(name);
        out.agents = m.agent_ids.size();

        // Per-item entropy and whole-battery diversity.
        for (std::size_t j = 0; j < items_.size(); ++j) {
            std::vector<double> xs;
            for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
                const double v = m.values(r, static_cast<Eigen::Index>(j));
                if (!std::isnan(v)) {
                    xs.push_back(v);
                }
            }
            const double e = xs.empty() ? kNaN : metrics::item_entropy(std::span<const double>(xs));
            out.item_entropy[items_[j]] = e;
            metric(items_[j], name, "entropy", e, xs.size());
        }
        if (m.values.rows() > 0) {
            out.diversity = metrics::profile_diversity(m.values);
            metric("*", name, "diversity_ratio", out.diversity->ratio, out.diversity->total);
            metric("*", name, "top10_coverage", out.diversity->top10_coverage, out.diversity->total);
        }

        std::size_t offset = 0;
        for (const auto &s : cfg_.scales) {
            const auto block = scale_block(m, s, offset);
            offset += s.item_codes.size();
            if (block.rows() == 0) {
                fail(s.name, name, "no agent answered every item of the scale");
                continue;
            }
            out.scale_entropy[s.name] = metrics::scale_entropy(block);
            metric(s.name, name, "scale_entropy", out.scale_entropy[s.name], static_cast<std::size_t>(block.rows()));
            try {
                auto alpha = metrics::cronbach(block, s.item_codes);
                metric(s.name, name, "alpha_raw", alpha.alpha_raw, alpha.n);
                metric(s.name, name, "alpha_std", alpha.alpha_std, alpha.n);
                metric(s.name, name, "mean_inter_item_r", alpha.mean_inter_item_r, alpha.n);
                out.alpha.emplace(s.name, alpha);
            } catch (const std::exception &e) {
                fail(s.name, name, std::string("alpha: ") + e.what());
            }
        }

        psychometrics::ScaleScores scores;
        try {
            scores = psychometrics::score_scales(m, cfg_.scales);
        } catch (const Error &e) {
            fail("scoring", name, e.what());
            return out;
        }
        for (const auto &s : cfg_.scales) {
            const auto &v = scores.scores.at(s.name);
            std::vector<double> xs;
            std::vector<std::string> groups;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!std::isnan(v[i]) && strata_[i]) {
                    xs.push_back(v[i]);
                    groups.push_back(*strata_[i]);
                }
            }
            double sum = 0.0;
            for (double x : xs) {
                sum += x;
            }
            out.scale_means[s.name] = xs.empty() ? kNaN : sum / static_cast<double>(xs.size());
            metric(s.name, name, "mean_score", out.scale_means[s.name], xs.size());
            try {
                const auto icc = metrics::icc1(xs, groups);
                out.icc[s.name] = icc.icc;
                metric(s.name, name, "icc1", icc.icc, xs.size());
            } catch (const std::exception &e) {
                out.icc[s.name] = kNaN;
                fail(s.name, name, std::string("icc: ") + e.what());
            }
        }

        try {
            auto reg = psychometrics::hierarchical_regression(scores);
            out.deleted = reg.deleted;
            for (const auto &t : reg.terms) {
                metric(t.name, name, "b", t.b, reg.n);
                metric(t.name, name, "beta", t.beta_std, reg.n);
                metric(t.name, name, "se", t.se, reg.n);
                metric(t.name, name, "p", t.p, reg.n);
            }
            for (const auto &level : reg.levels) {
                metric("level " + std::to_string(level.level), name, "r_squared", level.r_squared, reg.n);
            }
            out.regression = std::move(reg);
            out.slopes = psychometrics::simple_slopes(scores, {}, cfg_.slope_band);
        } catch (const Error &e) {
            fail("regression", name, e.what());
        }
        return out;
    }

    const StudyPlan &plan_;
    const StudyConfig &cfg_;
    EvalReport &report_;
    std::map<PredictionKey, corpus::AnswerValue> finals_;
    std::vector<std::string> items_;
    std::vector<std::optional<std::string>> strata_;
};

} // namespace

void assemble_regression(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records,
                         EvalReport &report) {
    RegressionAssembler(plan, records, report).run();
}

} // namespace surveysim::study::detail
