#include "surveysim/inference/bootstrap.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/parallel.hpp"
#include "surveysim/common/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace surveysim::inference {

using corpus::AnswerValue;
using corpus::MissingReason;

void Panel::validate() const {
    for (const auto &q : questions) {
        if (q.truth.size() != participants.size()) {
            throw ValidationError("question '" + q.code + "' has " + std::to_string(q.truth.size()) +
                                  " ground-truth entries for " + std::to_string(participants.size()) +
                                  " participants");
        }
        for (const auto &[cond, preds] : q.predictions) {
            if (preds.size() != participants.size()) {
                throw ValidationError("question '" + q.code + "' condition '" + cond + "' has " +
                                      std::to_string(preds.size()) + " predictions for " +
                                      std::to_string(participants.size()) + " participants");
            }
        }
    }
}

void BootstrapConfig::validate() const {
    if (iterations < 1) {
        throw ConfigurationError("bootstrap iterations must be >= 1");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw ConfigurationError("bootstrap confidence must lie in (0, 1)");
    }
    if (k_bins < 1) {
        throw ConfigurationError("k_bins must be >= 1");
    }
}

double percentile_sorted(const std::vector<double> &sorted, double q) {
    if (sorted.empty()) {
        throw std::invalid_argument("percentile of empty sample");
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

/// Question recoded to integers (categorical) or doubles (numeric); -1 / NaN = excluded.
struct Encoded {
    bool numeric = false;
    std::size_t categories = 0;
    std::vector<int> truth_code;
    std::vector<int> pred_code;
    std::vector<double> truth_num;
    std::vector<double> pred_num;
};

bool truth_counts(const AnswerValue &v, bool numeric) {
    if (numeric) {
        return v.is_numeric();
    }
    return v.is_categorical() ||
           (v.is_missing() && (v.reason() == MissingReason::refusal || v.reason() == MissingReason::dont_know));
}

bool prediction_counts(const AnswerValue &v, bool numeric, const MissingHandling &missing) {
    if (numeric) {
        return v.is_numeric();
    }
    if (v.is_missing() && v.reason() == MissingReason::unparseable) {
        return missing.keep_unparseable_as_category;
    }
    return v.is_categorical() || v.is_missing();
}

Encoded encode(const QuestionData &q, const std::vector<std::optional<AnswerValue>> &preds,
               const MissingHandling &missing) {
    Encoded e;
    e.numeric = q.numeric;
    const auto n = q.truth.size();
    if (q.numeric) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        e.truth_num.assign(n, nan);
        e.pred_num.assign(n, nan);
        for (std::size_t i = 0; i < n; ++i) {
            if (q.truth[i] && truth_counts(*q.truth[i], true)) {
                e.truth_num[i] = q.truth[i]->number();
            }
            if (preds[i] && prediction_counts(*preds[i], true, missing)) {
                e.pred_num[i] = preds[i]->number();
            }
        }
        return e;
    }
    std::unordered_map<std::string, int> index;
    auto code_of = [&](const AnswerValue &v) {
        const auto label = v.display();
        auto [it, inserted] = index.try_emplace(label, static_cast<int>(index.size()));
        return it->second;
    };
    e.truth_code.assign(n, -1);
    e.pred_code.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (q.truth[i] && truth_counts(*q.truth[i], false)) {
            e.truth_code[i] = code_of(*q.truth[i]);
        }
        if (preds[i] && prediction_counts(*preds[i], false, missing)) {
            e.pred_code[i] = code_of(*preds[i]);
        }
    }
    e.categories = index.size();
    return e;
}

std::optional<double> encoded_tvd(const Encoded &e, const std::vector<std::size_t> &rows, std::size_t k_bins,
                                  std::vector<double> &scratch_a, std::vector<double> &scratch_b) {
    if (e.numeric) {
        scratch_a.clear();
        scratch_b.clear();
        for (auto r : rows) {
            if (std::isnan(e.truth_num[r])) {
                continue;
            }
            scratch_a.push_back(e.truth_num[r]);
            if (!std::isnan(e.pred_num[r])) {
                scratch_b.push_back(e.pred_num[r]);
            }
        }
        if (scratch_a.empty() || scratch_b.empty()) {
            return std::nullopt;
        }
        return metrics::tvd_binned(scratch_a, scratch_b, k_bins);
    }
    scratch_a.assign(e.categories, 0.0);
    scratch_b.assign(e.categories, 0.0);
    double nt = 0.0, np = 0.0;
    for (auto r : rows) {
        if (e.truth_code[r] < 0) {
            continue;
        }
        scratch_a[static_cast<std::size_t>(e.truth_code[r])] += 1.0;
        nt += 1.0;
        if (e.pred_code[r] >= 0) {
            scratch_b[static_cast<std::size_t>(e.pred_code[r])] += 1.0;
            np += 1.0;
        }
    }
    if (nt == 0.0 || np == 0.0) {
        return std::nullopt;
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < e.categories; ++c) {
        sum += std::fabs(scratch_a[c] / nt - scratch_b[c] / np);
    }
    return std::min(1.0, sum / 2.0);
}

const std::vector<std::optional<AnswerValue>> &predictions_for(const QuestionData &q, const std::string &condition) {
    const auto it = q.predictions.find(condition);
    if (it == q.predictions.end()) {
        throw CoverageError("question '" + q.code + "' has no predictions for condition '" + condition + "'");
    }
    return it->second;
}

struct Draw {
    double delta = 0.0;
    double tvd_a = 0.0;
    double tvd_b = 0.0;
    std::vector<double> per_a; ///< NaN when undefined in this draw
    std::vector<double> per_b;
};

} // namespace

std::optional<double> question_tvd(const QuestionData &question, const std::string &condition,
                                   const std::vector<std::size_t> &rows, std::size_t k_bins,
                                   const MissingHandling &missing) {
    const auto e = encode(question, predictions_for(question, condition), missing);
    std::vector<double> a, b;
    return encoded_tvd(e, rows, k_bins, a, b);
}

BootstrapResult participant_bootstrap(const Panel &panel, const std::string &condition_a,
                                      const std::string &condition_b, const BootstrapConfig &config) {
    config.validate();
    panel.validate();
    const std::size_t n = panel.participants.size();
    if (n < 2) {
        throw InsufficientDataError("bootstrap needs at least two participants");
    }
    if (panel.questions.empty()) {
        throw InsufficientDataError("bootstrap needs at least one question");
    }
    std::vector<Encoded> enc_a, enc_b;
    for (const auto &q : panel.questions) {
        enc_a.push_back(encode(q, predictions_for(q, condition_a), config.missing));
        enc_b.push_back(encode(q, predictions_for(q, condition_b), config.missing));
    }
    const std::size_t nq = panel.questions.size();

    auto evaluate = [&](const std::vector<std::size_t> &rows, Draw &draw) {
        std::vector<double> sa, sb;
        draw.per_a.assign(nq, std::nan(""));
        draw.per_b.assign(nq, std::nan(""));
        double sum_a = 0.0, sum_b = 0.0;
        std::size_t used = 0;
        for (std::size_t q = 0; q < nq; ++q) {
            const auto ta = encoded_tvd(enc_a[q], rows, config.k_bins, sa, sb);
            const auto tb = encoded_tvd(enc_b[q], rows, config.k_bins, sa, sb);
            if (!ta || !tb) {
                continue;
            }
            draw.per_a[q] = *ta;
            draw.per_b[q] = *tb;
            sum_a += *ta;
            sum_b += *tb;
            ++used;
        }
        if (used == 0) {
            draw.delta = draw.tvd_a = draw.tvd_b = std::nan("");
            return;
        }
        draw.tvd_a = sum_a / static_cast<double>(used);
        draw.tvd_b = sum_b / static_cast<double>(used);
        draw.delta = draw.tvd_a - draw.tvd_b;
    };

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        all[i] = i;
    }
    Draw observed;
    evaluate(all, observed);

    std::vector<Draw> draws(config.iterations);
    parallel_for(config.iterations, config.workers, [&](std::size_t it) {
        Rng rng = SeedSequence(config.seed).mix(std::uint64_t{0x626f6f74}).mix(static_cast<std::uint64_t>(it)).engine();
        std::vector<std::size_t> rows(n);
        for (auto &r : rows) {
            r = static_cast<std::size_t>(uniform_index(rng, n));
        }
        evaluate(rows, draws[it]);
    });

    BootstrapResult result;
    result.participants = n;
    result.questions = nq;
    result.observed_delta_tvd = observed.delta;
    std::vector<double> deltas;
    std::vector<double> sum_qa(nq, 0.0), sum_qb(nq, 0.0);
    std::vector<std::size_t> count_q(nq, 0);
    double sum_a = 0.0, sum_b = 0.0;
    for (const auto &d : draws) {
        if (std::isnan(d.delta)) {
            continue;
        }
        deltas.push_back(d.delta);
        sum_a += d.tvd_a;
        sum_b += d.tvd_b;
        for (std::size_t q = 0; q < nq; ++q) {
            if (!std::isnan(d.per_a[q])) {
                sum_qa[q] += d.per_a[q];
                sum_qb[q] += d.per_b[q];
                ++count_q[q];
            }
        }
    }
    if (deltas.empty()) {
        throw InsufficientDataError("no bootstrap iteration produced a defined TVD difference");
    }
    result.iterations_used = deltas.size();
    const double used = static_cast<double>(deltas.size());
    double total = 0.0;
    std::size_t le = 0, ge = 0;
    for (double d : deltas) {
        total += d;
        le += d <= 0.0;
        ge += d >= 0.0;
    }
    result.mean_delta_tvd = total / used;
    result.mean_tvd_a = sum_a / used;
    result.mean_tvd_b = sum_b / used;
    for (std::size_t q = 0; q < nq; ++q) {
        if (count_q[q] == 0) {
            continue;
        }
        const auto &code = panel.questions[q].code;
        result.per_question_tvd_a[code] = sum_qa[q] / static_cast<double>(count_q[q]);
        result.per_question_tvd_b[code] = sum_qb[q] / static_cast<double>(count_q[q]);
        result.per_question_delta[code] = result.per_question_tvd_a[code] - result.per_question_tvd_b[code];
    }
    std::sort(deltas.begin(), deltas.end());
    const double alpha = 1.0 - config.confidence;
    result.ci_low = percentile_sorted(deltas, alpha / 2.0);
    result.ci_high = percentile_sorted(deltas, 1.0 - alpha / 2.0);
    result.significant = result.ci_low > 0.0 || result.ci_high < 0.0;
    result.achieved_p = std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / used);
    return result;
}

} // namespace surveysim::inference
