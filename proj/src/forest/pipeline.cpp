#include "surveysim/forest/forest.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/parallel.hpp"
#include "surveysim/common/random.hpp"
#include "surveysim/metrics/distribution.hpp"
#include "surveysim/metrics/fidelity.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <ostream>

namespace surveysim::forest {

using corpus::AnswerValue;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One source variable before encoding: country, age or a survey item.
struct Source {
    std::string name;
    bool categorical = false;
    std::vector<std::string> levels; ///< observed levels, declared order
    std::vector<std::optional<std::string>> labels;
    std::vector<double> numbers; ///< NaN = missing
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

} // namespace

PreparedData preprocess(const corpus::SurveyCorpus &corpus, const std::string &target,
                        const PreprocessOptions &options) {
    const auto &item = corpus.instrument.at(target);
    if (!(options.train_share > 0.0 && options.validation_share >= 0.0 &&
          options.train_share + options.validation_share < 1.0)) {
        throw ConfigurationError("split shares must leave room for a test split");
    }
    if (!(options.max_missing_share >= 0.0 && options.max_missing_share <= 1.0)) {
        throw ConfigurationError("max_missing_share must lie in [0, 1]");
    }

    std::vector<const corpus::RespondentRecord *> kept;
    for (const auto &r : corpus.respondents) {
        if (!options.countries.empty() && !options.countries.contains(r.country)) {
            continue;
        }
        // Missing targets, including Refusal and Don't know, leave the sample.
        if (!r.answered(target)) {
            continue;
        }
        kept.push_back(&r);
    }
    const auto n = kept.size();
    if (n < options.min_rows) {
        throw InsufficientDataError("target '" + target + "' has " + std::to_string(n) + " usable rows, need " +
                                    std::to_string(options.min_rows));
    }

    PreparedData out;
    auto &m = out.matrix;
    m.target_code = target;
    m.task = item.is_categorical() ? Task::classification : Task::regression;
    if (m.task == Task::classification) {
        for (const auto &label : item.options()) {
            if (std::any_of(kept.begin(), kept.end(), [&](auto *r) { return r->find(target)->label() == label; })) {
                m.class_labels.push_back(label);
            }
        }
    }
    for (auto *r : kept) {
        m.row_ids.push_back(r->respondent_id);
        const auto *answer = r->find(target);
        if (m.task == Task::classification) {
            const auto it = std::find(m.class_labels.begin(), m.class_labels.end(), answer->label());
            m.y.push_back(static_cast<double>(it - m.class_labels.begin()));
        } else {
            m.y.push_back(answer->number());
        }
    }

    std::vector<Source> sources;
    {
        Source country{"country", true, {}, {}, {}};
        for (auto *r : kept) {
            country.labels.emplace_back(r->country);
            if (std::find(country.levels.begin(), country.levels.end(), r->country) == country.levels.end()) {
                country.levels.push_back(r->country);
            }
        }
        std::sort(country.levels.begin(), country.levels.end());
        sources.push_back(std::move(country));
        Source age{"age", false, {}, {}, {}};
        for (auto *r : kept) {
            age.numbers.push_back(static_cast<double>(r->age));
        }
        sources.push_back(std::move(age));
    }
    for (const auto &it : corpus.instrument.items()) {
        if (it.code == target || options.excluded_items.contains(it.code)) {
            continue;
        }
        Source s{it.code, it.is_categorical(), {}, {}, {}};
        for (auto *r : kept) {
            const AnswerValue *a = r->find(it.code);
            const bool present = a != nullptr && !a->is_missing();
            if (s.categorical) {
                s.labels.push_back(present ? std::optional<std::string>(a->label()) : std::nullopt);
            } else {
                s.numbers.push_back(present ? a->number() : kNaN);
            }
        }
        if (s.categorical) {
            for (const auto &label : it.options()) {
                if (std::any_of(s.labels.begin(), s.labels.end(), [&](const auto &l) { return l == label; })) {
                    s.levels.push_back(label);
                }
            }
        }
        sources.push_back(std::move(s));
    }

    // Missingness filter, then encoding.
    std::vector<std::vector<double>> columns;
    std::vector<bool> indicator;
    for (const auto &s : sources) {
        const std::size_t missing =
            s.categorical ? static_cast<std::size_t>(std::count(s.labels.begin(), s.labels.end(), std::nullopt))
                          : static_cast<std::size_t>(
                                std::count_if(s.numbers.begin(), s.numbers.end(), [](double v) { return std::isnan(v); }));
        if (static_cast<double>(missing) > options.max_missing_share * static_cast<double>(n)) {
            m.dropped_columns.push_back(s.name);
            continue;
        }
        if (!s.categorical) {
            m.column_names.push_back(s.name);
            columns.push_back(s.numbers);
            indicator.push_back(false);
            continue;
        }
        for (const auto &level : s.levels) {
            std::vector<double> col(n);
            for (std::size_t i = 0; i < n; ++i) {
                col[i] = s.labels[i] ? (*s.labels[i] == level ? 1.0 : 0.0) : kNaN;
            }
            m.column_names.push_back(s.name + "=" + level);
            columns.push_back(std::move(col));
            indicator.push_back(true);
        }
    }

    // Seeded split.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = SeedSequence(options.seed).mix("split").engine();
    shuffle(std::span<std::size_t>(order), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(options.train_share * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(options.validation_share * static_cast<double>(n)));
    auto &split = out.split;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                            order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());

    // Imputation from the train split: mode for indicators (ties -> 0), median otherwise.
    m.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        std::vector<double> seen;
        for (auto r : split.train) {
            if (!std::isnan(columns[c][r])) {
                seen.push_back(columns[c][r]);
            }
        }
        double fill = 0.0;
        if (!seen.empty()) {
            if (indicator[c]) {
                const auto ones = std::count(seen.begin(), seen.end(), 1.0);
                fill = 2 * ones > static_cast<std::ptrdiff_t>(seen.size()) ? 1.0 : 0.0;
            } else {
                fill = median(seen);
            }
        }
        m.imputed_values.push_back(fill);
        for (std::size_t i = 0; i < n; ++i) {
            m.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                std::isnan(columns[c][i]) ? fill : columns[c][i];
        }
    }
    return out;
}

std::vector<Hyperparameters> Grid::points() const {
    std::vector<Hyperparameters> out;
    for (auto ne : n_estimators) {
        for (auto d : max_depth) {
            for (auto s : min_samples_split) {
                for (auto l : min_samples_leaf) {
                    out.push_back({ne, d, s, l});
                }
            }
        }
    }
    return out;
}

namespace {

std::vector<std::string> labels_of(const DesignMatrix &m, const std::vector<double> &codes) {
    std::vector<std::string> out;
    out.reserve(codes.size());
    for (double c : codes) {
        out.push_back(m.class_labels[static_cast<std::size_t>(c)]);
    }
    return out;
}

std::vector<double> predict_rows(const ForestModel &model, const DesignMatrix &m, const std::vector<std::size_t> &rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto r : rows) {
        const double *row = m.x.row(static_cast<Eigen::Index>(r)).data();
        out.push_back(model.task == Task::classification ? static_cast<double>(model.predict_class(row))
                                                         : model.predict_value(row));
    }
    return out;
}

std::vector<double> targets(const DesignMatrix &m, const std::vector<std::size_t> &rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto r : rows) {
        out.push_back(m.y[r]);
    }
    return out;
}

/// Weighted F1 or Pearson r; NaN when the correlation is undefined.
double score(const DesignMatrix &m, const std::vector<double> &truth, const std::vector<double> &pred) {
    if (m.task == Task::classification) {
        const auto t = labels_of(m, truth);
        const auto p = labels_of(m, pred);
        return metrics::weighted_f1(t, p);
    }
    try {
        return metrics::pearson(truth, pred);
    } catch (const UndefinedMetricError &) {
        return kNaN;
    }
}

bool better(const GridScore &candidate, const GridScore &incumbent) {
    const double a = candidate.validation_score;
    const double b = incumbent.validation_score;
    if (std::isnan(a)) {
        return false;
    }
    if (std::isnan(b) || a > b) {
        return true;
    }
    if (a < b) {
        return false;
    }
    if (candidate.hp.n_estimators != incumbent.hp.n_estimators) {
        return candidate.hp.n_estimators < incumbent.hp.n_estimators;
    }
    return candidate.hp.max_depth < incumbent.hp.max_depth;
}

} // namespace

GridSearchResult grid_search_train(const DesignMatrix &matrix, const SplitIndices &split, const Grid &grid,
                                   std::uint64_t seed, std::size_t workers) {
    const auto points = grid.points();
    if (points.empty()) {
        throw ConfigurationError("hyperparameter grid is empty");
    }
    if (split.validation.empty()) {
        throw InsufficientDataError("validation split is empty");
    }
    const auto truth = targets(matrix, split.validation);
    std::vector<ForestModel> models(points.size());
    std::vector<GridScore> table(points.size());
    parallel_for(points.size(), workers, [&](std::size_t i) {
        TrainOptions opts;
        opts.hp = points[i];
        opts.seed = seed;
        opts.workers = 1;
        models[i] = train_forest(matrix.x, matrix.y, split.train, matrix.task, matrix.class_labels,
                                 matrix.column_names, opts);
        table[i] = {points[i], score(matrix, truth, predict_rows(models[i], matrix, split.validation))};
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (better(table[i], table[best])) {
            best = i;
        }
    }
    return {std::move(models[best]), table[best].validation_score, std::move(table)};
}

EvaluationRecord evaluate(const ForestModel &model, const DesignMatrix &matrix, const SplitIndices &split) {
    if (model.task != matrix.task) {
        throw ConfigurationError("model task does not match the target kind");
    }
    EvaluationRecord rec;
    rec.target_code = matrix.target_code;
    rec.task = matrix.task;
    rec.metric = matrix.task == Task::classification ? "weighted_f1" : "pearson";
    rec.hp = model.hp;
    rec.n_train = split.train.size();
    rec.n_test = split.test.size();
    if (split.test.empty() || split.train.empty()) {
        throw InsufficientDataError("train and test splits must be non-empty");
    }
    const auto train_truth = targets(matrix, split.train);
    const auto test_truth = targets(matrix, split.test);
    const auto train_pred = predict_rows(model, matrix, split.train);
    const auto test_pred = predict_rows(model, matrix, split.test);
    rec.train_score = score(matrix, train_truth, train_pred);
    rec.test_score = score(matrix, test_truth, test_pred);
    rec.train_defined = !std::isnan(rec.train_score);
    rec.test_defined = !std::isnan(rec.test_score);
    if (matrix.task == Task::classification) {
        const auto t = labels_of(matrix, test_truth);
        const auto p = labels_of(matrix, test_pred);
        rec.test_tvd = metrics::tvd_discrete(metrics::DistributionSummary::from_labels(t, matrix.class_labels),
                                             metrics::DistributionSummary::from_labels(p, matrix.class_labels));
    } else {
        rec.test_tvd = metrics::tvd_binned(test_truth, test_pred);
    }
    return rec;
}

void write_model(std::ostream &out, const ForestModel &model) {
    json j;
    j["format"] = "surveysim-forest";
    j["version"] = 1;
    j["task"] = to_string(model.task);
    j["hyperparameters"] = {{"n_estimators", model.hp.n_estimators},
                            {"max_depth", model.hp.max_depth},
                            {"min_samples_split", model.hp.min_samples_split},
                            {"min_samples_leaf", model.hp.min_samples_leaf}};
    j["seed"] = model.seed;
    j["max_features"] = model.max_features;
    j["feature_names"] = model.feature_names;
    j["class_labels"] = model.class_labels;
    j["trees"] = json::array();
    for (const auto &tree : model.trees) {
        json t;
        for (const auto &node : tree.nodes) {
            t["feature"].push_back(node.feature);
            t["threshold"].push_back(node.threshold);
            t["left"].push_back(node.left);
            t["right"].push_back(node.right);
            t["value"].push_back(node.value);
            t["samples"].push_back(node.samples);
            t["distribution"].push_back(node.distribution);
        }
        j["trees"].push_back(std::move(t));
    }
    out << j.dump(1) << '\n';
}

ForestModel read_model(std::istream &in) {
    try {
        const json j = json::parse(in);
        if (j.at("format") != "surveysim-forest") {
            throw ParseError("not a forest model file");
        }
        ForestModel model;
        const auto task = j.at("task").get<std::string>();
        if (task != "classification" && task != "regression") {
            throw ParseError("unknown task '" + task + "'");
        }
        model.task = task == "classification" ? Task::classification : Task::regression;
        const auto &hp = j.at("hyperparameters");
        model.hp = {hp.at("n_estimators"), hp.at("max_depth"), hp.at("min_samples_split"), hp.at("min_samples_leaf")};
        model.seed = j.at("seed");
        model.max_features = j.at("max_features");
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.class_labels = j.at("class_labels").get<std::vector<std::string>>();
        for (const auto &t : j.at("trees")) {
            Tree tree;
            const auto count = t.at("feature").size();
            for (std::size_t i = 0; i < count; ++i) {
                TreeNode node;
                node.feature = t.at("feature")[i];
                node.threshold = t.at("threshold")[i];
                node.left = t.at("left")[i];
                node.right = t.at("right")[i];
                node.value = t.at("value")[i];
                node.samples = t.at("samples")[i];
                node.distribution = t.at("distribution")[i].get<std::vector<double>>();
                tree.nodes.push_back(std::move(node));
            }
            model.trees.push_back(std::move(tree));
        }
        return model;
    } catch (const json::exception &e) {
        throw ParseError(std::string("malformed forest model: ") + e.what());
    }
}

} // namespace surveysim::forest
