#include <doctest.h>

#include "../support/oracles.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/random.hpp"
#include "surveysim/forest/forest.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

using namespace surveysim;
using namespace surveysim::forest;
using corpus::AnswerValue;

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

/// Two Gaussian blobs in `p` dimensions; class 1 is shifted by `gap` on the first two axes.
DesignMatrix separable(std::size_t n, std::size_t p, double gap, std::uint64_t seed) {
    Rng rng(seed);
    DesignMatrix m;
    m.task = Task::classification;
    m.target_code = "Y";
    m.class_labels = {"no", "yes"};
    m.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(uniform_index(rng, 2));
        m.y.push_back(cls);
        for (std::size_t j = 0; j < p; ++j) {
            const double shift = (j < 2 && cls == 1) ? gap : 0.0;
            m.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = standard_normal(rng) + shift;
        }
        m.row_ids.push_back("r" + std::to_string(i));
    }
    for (std::size_t j = 0; j < p; ++j) {
        m.column_names.push_back("f" + std::to_string(j));
    }
    return m;
}

SplitIndices split_60_20_20(std::size_t n) {
    SplitIndices s;
    for (std::size_t i = 0; i < n; ++i) {
        (i % 5 < 3 ? s.train : (i % 5 == 3 ? s.validation : s.test)).push_back(i);
    }
    return s;
}

corpus::SurveyCorpus pipeline_corpus() {
    using corpus::CategoricalKind;
    using corpus::NumericKind;
    corpus::SurveyCorpus c;
    c.instrument = corpus::Instrument({
        {"T", "target", CategoricalKind{{"Yes", "No"}}, "", false},
        {"C3", "three levels", CategoricalKind{{"a", "b", "c", "d"}}, "", false},
        {"N40", "sparse numeric", NumericKind{0, 10}, "", false},
        {"N30", "borderline numeric", NumericKind{0, 10}, "", false},
        {"LEAK", "excluded", NumericKind{0, 10}, "", false},
    });
    for (int i = 0; i < 110; ++i) {
        corpus::RespondentRecord r;
        r.respondent_id = "R" + std::to_string(i);
        r.country = i % 2 == 0 ? "Spain" : "France";
        r.age = 50 + i % 30;
        if (i < 100) {
            r.answers["T"] = AnswerValue::categorical(i % 3 == 0 ? "Yes" : "No");
        } else if (i < 105) {
            r.answers["T"] = AnswerValue::missing(corpus::MissingReason::refusal);
        } else {
            r.answers["T"] = AnswerValue::missing(corpus::MissingReason::dont_know);
        }
        r.answers["C3"] = AnswerValue::categorical(std::string(1, static_cast<char>('a' + i % 3)));
        if (i % 10 >= 4) {
            r.answers["N40"] = AnswerValue::numeric(i % 10);
        }
        if (i % 10 >= 3) {
            r.answers["N30"] = AnswerValue::numeric(i % 7);
        }
        r.answers["LEAK"] = AnswerValue::numeric(1);
        c.respondents.push_back(std::move(r));
    }
    return c;
}

} // namespace

TEST_CASE("impurity of pure nodes") {
    CHECK(gini({5, 0, 0}) == 0.0);
    CHECK(gini({1, 1}) == doctest::Approx(0.5));
    CHECK(variance({3, 3, 3}) == 0.0);
    CHECK(variance({1, 3}) == doctest::Approx(1.0));
}

TEST_CASE("depth-1 single tree equals the exhaustive threshold rule") {
    Rng rng(12);
    for (int instance = 0; instance < 200; ++instance) {
        const auto n = 5 + uniform_index(rng, 96);
        const int classes = 2 + static_cast<int>(uniform_index(rng, 2));
        std::vector<double> xs;
        std::vector<int> ys;
        FeatureMatrix x(static_cast<Eigen::Index>(n), 1);
        std::vector<double> y;
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse values so duplicate x occur regularly.
            const double v = instance % 2 == 0 ? std::round(standard_normal(rng) * 4) / 2 : standard_normal(rng);
            int c = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes)));
            if (v > 0.3 && uniform01(rng) < 0.6) {
                c = 0;
            }
            xs.push_back(v);
            ys.push_back(c);
            x(static_cast<Eigen::Index>(i), 0) = v;
            y.push_back(c);
        }
        if (std::all_of(ys.begin(), ys.end(), [&](int c) { return c == ys[0]; })) {
            continue;
        }
        std::vector<std::string> labels;
        for (int c = 0; c < classes; ++c) {
            labels.push_back("c" + std::to_string(c));
        }
        TrainOptions opts;
        opts.hp = {1, 1, 2, 1};
        opts.bootstrap = false;
        opts.seed = static_cast<std::uint64_t>(instance);
        const auto model = train_forest(x, y, all_rows(n), Task::classification, labels, {"x"}, opts);
        const auto stump = oracle::best_stump(xs, ys, classes);
        const auto &root = model.trees[0].nodes[0];
        if (std::isnan(stump.threshold)) {
            CHECK(root.is_leaf());
        } else {
            REQUIRE_FALSE(root.is_leaf());
            CHECK(root.threshold == doctest::Approx(stump.threshold).epsilon(1e-12));
        }
        for (double q = -6.0; q <= 6.0; q += 0.125) {
            const int expected = std::isnan(stump.threshold) || q <= stump.threshold ? stump.left : stump.right;
            CHECK(static_cast<int>(model.predict_class(&q)) == expected);
        }
    }
}

TEST_CASE("trees respect depth and leaf bounds and use bootstrap multisets") {
    const auto m = separable(400, 6, 1.0, 3);
    const auto rows = all_rows(240);
    TrainOptions opts;
    opts.hp = {8, 4, 10, 7};
    opts.seed = 5;
    const auto model = train_forest(m.x, m.y, rows, m.task, m.class_labels, m.column_names, opts);
    REQUIRE(model.trees.size() == 8);
    CHECK(model.max_features == 2); // floor(sqrt(6))
    bool differ = false;
    for (const auto &tree : model.trees) {
        CHECK(tree.depth() <= 4);
        CHECK(tree.nodes[0].samples == rows.size());
        for (const auto &node : tree.nodes) {
            if (node.is_leaf()) {
                CHECK(node.samples >= 7);
            } else {
                CHECK(node.samples >= 10);
                CHECK(tree.nodes[static_cast<std::size_t>(node.left)].samples +
                          tree.nodes[static_cast<std::size_t>(node.right)].samples ==
                      node.samples);
            }
        }
        differ = differ || !(tree == model.trees[0]);
    }
    CHECK(differ);
}

TEST_CASE("larger minimum leaf never adds nodes") {
    const auto m = separable(300, 4, 0.8, 8);
    const auto rows = all_rows(300);
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (const std::size_t leaf : {1, 2, 5, 10, 20, 40}) {
        TrainOptions opts;
        opts.hp = {1, 7, 2, leaf};
        opts.bootstrap = false;
        opts.max_features = 4;
        const auto model = train_forest(m.x, m.y, rows, m.task, m.class_labels, m.column_names, opts);
        CHECK(model.trees[0].node_count() <= previous);
        previous = model.trees[0].node_count();
    }
}

TEST_CASE("training errors") {
    auto m = separable(50, 3, 2.0, 1);
    std::vector<std::size_t> single;
    for (std::size_t i = 0; i < 50; ++i) {
        if (m.y[i] == 1.0) {
            single.push_back(i);
        }
    }
    CHECK_THROWS_AS(train_forest(m.x, m.y, single, m.task, m.class_labels, m.column_names, {}), TrainingError);
    CHECK_THROWS_AS(train_forest(m.x, m.y, {}, m.task, m.class_labels, m.column_names, {}), TrainingError);
    const std::vector<double> constant(50, 2.0);
    CHECK_THROWS_AS(train_forest(m.x, constant, all_rows(50), Task::regression, {}, m.column_names, {}),
                    TrainingError);
}

TEST_CASE("preprocessing pipeline") {
    const auto c = pipeline_corpus();
    PreprocessOptions opts;
    opts.seed = 4;
    opts.excluded_items = {"LEAK"};
    const auto prepared = preprocess(c, "T", opts);
    const auto &m = prepared.matrix;
    CHECK(m.task == Task::classification);
    CHECK(m.x.rows() == 100); // refusals and don't-knows removed
    CHECK(m.class_labels == std::vector<std::string>{"Yes", "No"});
    CHECK(m.dropped_columns == std::vector<std::string>{"N40"});
    const std::vector<std::string> expected{"country=France", "country=Spain", "age", "C3=a", "C3=b", "C3=c", "N30"};
    CHECK(m.column_names == expected);
    CHECK(prepared.split.train.size() == 60);
    CHECK(prepared.split.validation.size() == 20);
    CHECK(prepared.split.test.size() == 20);
    std::vector<std::size_t> seen = prepared.split.train;
    seen.insert(seen.end(), prepared.split.validation.begin(), prepared.split.validation.end());
    seen.insert(seen.end(), prepared.split.test.begin(), prepared.split.test.end());
    std::sort(seen.begin(), seen.end());
    CHECK(seen == all_rows(100));
    CHECK_FALSE(m.x.hasNaN());
    // N30 is imputed with the train median of observed values.
    std::vector<double> observed;
    for (auto r : prepared.split.train) {
        const auto *a = c.find_respondent(m.row_ids[r])->find("N30");
        if (a) {
            observed.push_back(a->number());
        }
    }
    std::sort(observed.begin(), observed.end());
    const double med = observed.size() % 2 ? observed[observed.size() / 2]
                                           : (observed[observed.size() / 2 - 1] + observed[observed.size() / 2]) / 2;
    CHECK(m.imputed_values[6] == med);

    const auto again = preprocess(c, "T", opts);
    CHECK(again.split.test == prepared.split.test);
    opts.seed = 5;
    CHECK(preprocess(c, "T", opts).split.test != prepared.split.test);

    opts.countries = {"Spain"};
    CHECK(preprocess(c, "T", opts).matrix.x.rows() == 50);
    opts.countries = {"Italy"};
    CHECK_THROWS_AS(preprocess(c, "T", opts), InsufficientDataError);
}

TEST_CASE("default grid has 108 points") {
    const Grid grid;
    const auto points = grid.points();
    CHECK(points.size() == 108);
    CHECK(points.front() == Hyperparameters{5, 3, 10, 5});
    CHECK(points.back() == Hyperparameters{50, 7, 50, 20});
}

TEST_CASE("grid search on separable data") {
    const auto m = separable(500, 5, 5.0, 21);
    const auto split = split_60_20_20(500);
    Grid grid;
    grid.n_estimators = {5, 10};
    grid.max_depth = {3, 5};
    const auto result = grid_search_train(m, split, grid, 9);
    CHECK(result.table.size() == 2 * 2 * 3 * 3);
    const auto rec = evaluate(result.best, m, split);
    CHECK(rec.metric == "weighted_f1");
    CHECK(rec.test_score >= 0.9);
    CHECK(rec.n_test == 100);
    // Ties go to the smallest forest, then the shallowest.
    for (const auto &row : result.table) {
        if (row.validation_score == result.best_score) {
            CHECK(row.hp.n_estimators >= result.best.hp.n_estimators);
            if (row.hp.n_estimators == result.best.hp.n_estimators) {
                CHECK(row.hp.max_depth >= result.best.hp.max_depth);
            }
        }
    }
    const auto rerun = grid_search_train(m, split, grid, 9, 1);
    CHECK(rerun.best == result.best);
    for (std::size_t i = 0; i < rerun.table.size(); ++i) {
        CHECK(rerun.table[i].validation_score == result.table[i].validation_score);
    }
}

TEST_CASE("evaluation edge cases") {
    SUBCASE("memorized training set") {
        const auto m = separable(60, 4, 0.3, 2);
        const auto split = split_60_20_20(60);
        TrainOptions opts;
        opts.hp = {1, 30, 2, 1};
        opts.bootstrap = false;
        opts.max_features = 4;
        const auto model = train_forest(m.x, m.y, split.train, m.task, m.class_labels, m.column_names, opts);
        const auto rec = evaluate(model, m, split);
        CHECK(rec.train_score == doctest::Approx(1.0));
        CHECK(rec.test_defined);
    }
    SUBCASE("perfect classifier has zero TVD") {
        const auto m = separable(200, 2, 30.0, 6);
        const auto split = split_60_20_20(200);
        TrainOptions opts;
        opts.hp = {5, 3, 2, 1};
        const auto model = train_forest(m.x, m.y, split.train, m.task, m.class_labels, m.column_names, opts);
        const auto rec = evaluate(model, m, split);
        CHECK(rec.test_score == 1.0);
        CHECK(rec.test_tvd == 0.0);
    }
    SUBCASE("constant regression predictions") {
        DesignMatrix m;
        m.task = Task::regression;
        m.target_code = "V";
        m.x = FeatureMatrix::Zero(50, 2);
        for (int i = 0; i < 50; ++i) {
            m.y.push_back(i % 7);
        }
        m.column_names = {"z0", "z1"};
        const auto split = split_60_20_20(50);
        const auto model = train_forest(m.x, m.y, split.train, m.task, {}, m.column_names, {});
        const auto rec = evaluate(model, m, split);
        CHECK(rec.metric == "pearson");
        CHECK_FALSE(rec.test_defined);
        CHECK(std::isnan(rec.test_score));
        CHECK(rec.test_tvd > 0.0);
    }
}

TEST_CASE("model files round-trip") {
    const auto m = separable(200, 3, 1.5, 30);
    TrainOptions opts;
    opts.hp = {4, 3, 10, 5};
    opts.seed = 77;
    const auto model = train_forest(m.x, m.y, all_rows(120), m.task, m.class_labels, m.column_names, opts);
    std::stringstream buf;
    write_model(buf, model);
    const auto back = read_model(buf);
    CHECK(back == model);
    std::stringstream bad("{\"format\": \"other\"}");
    CHECK_THROWS_AS(read_model(bad), ParseError);
    std::stringstream junk("{not json");
    CHECK_THROWS_AS(read_model(junk), ParseError);
}
