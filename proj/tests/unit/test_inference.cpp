#include <doctest.h>

#include "../support/oracles.hpp"
#include "../support/panels.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/inference/bootstrap.hpp"
#include "surveysim/llm/batch.hpp"

#include <cmath>
#include <map>
#include <numeric>

using namespace surveysim;
using namespace surveysim::inference;
using corpus::AnswerValue;

namespace {

/// 200 participants, 5 questions; condition B echoes the truth, A answers uniformly.
Panel planted_panel(std::uint64_t seed) {
    const std::vector<corpus::SurveyItem> items{
        {"Q0", "q0", corpus::CategoricalKind{{"a", "b", "c", "d"}}, "", false},
        {"Q1", "q1", corpus::CategoricalKind{{"yes", "no"}}, "", false},
        {"Q2", "q2", corpus::NumericKind{0, 100}, "", false},
        {"Q3", "q3", corpus::CategoricalKind{{"x", "y", "z"}}, "", false},
        {"Q4", "q4", corpus::NumericKind{0, 10}, "", false},
    };
    Rng rng(seed);
    Panel panel;
    for (int i = 0; i < 200; ++i) {
        panel.participants.push_back("p" + std::to_string(i));
    }
    const agents::AgentProfile profile{"p", agents::Condition::demo7, {}, std::nullopt};
    for (const auto &item : items) {
        QuestionData q{item.code, item.is_numeric(), {}, {}};
        const auto target = agents::make_target(item);
        for (int i = 0; i < 200; ++i) {
            AnswerValue truth;
            if (item.is_numeric()) {
                const double mid = (item.range().min + item.range().max) / 2;
                const double sd = (item.range().max - item.range().min) / 8;
                truth = AnswerValue::numeric(std::clamp(std::round(mid + sd * standard_normal(rng)), item.range().min,
                                                        item.range().max));
            } else {
                const auto k = item.options().size();
                truth = AnswerValue::categorical(item.options()[std::min(k - 1, uniform_index(rng, k) / 2)]);
            }
            q.truth.push_back(truth);
            const auto echo = llm::simulate_mock(profile, target, llm::EchoTruth{}, truth, rng());
            const auto uniform = llm::simulate_mock(profile, target, llm::UniformRandom{}, truth, rng());
            q.predictions["B"].push_back(llm::parse_answer(echo, item, target.mode).value);
            q.predictions["A"].push_back(llm::parse_answer(uniform, item, target.mode).value);
        }
        panel.questions.push_back(std::move(q));
    }
    return panel;
}

} // namespace

TEST_CASE("percentile interpolation") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    CHECK(percentile_sorted(v, 0.0) == 1);
    CHECK(percentile_sorted(v, 1.0) == 5);
    CHECK(percentile_sorted(v, 0.5) == 3);
    CHECK(percentile_sorted(v, 0.125) == doctest::Approx(1.5));
}

TEST_CASE("question TVD over all rows matches the label oracle") {
    Rng rng(1);
    const auto panel = panels::null_panel(rng, 150, 4);
    std::vector<std::size_t> rows(150);
    std::iota(rows.begin(), rows.end(), 0);
    for (const auto &q : panel.questions) {
        std::map<std::string, double> p, r;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            p[q.truth[i]->display()] += 1.0 / 150;
            r[q.predictions.at("A")[i]->display()] += 1.0 / 150;
        }
        CHECK(*question_tvd(q, "A", rows, 50) == doctest::Approx(oracle::tvd_labels(p, r)).epsilon(1e-12));
    }
}

TEST_CASE("absent answers are excluded and unparseable predictions are a category by default") {
    QuestionData q{"Q", false, {}, {}};
    q.truth = {AnswerValue::categorical("a"), AnswerValue::categorical("b"), std::nullopt,
               AnswerValue::missing(corpus::MissingReason::dont_know)};
    q.predictions["A"] = {AnswerValue::categorical("a"), AnswerValue::missing(corpus::MissingReason::unparseable),
                          AnswerValue::categorical("b"), AnswerValue::missing(corpus::MissingReason::dont_know)};
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    // Truth {a, b, DK}; predictions {a, Unparseable, DK}: half the mass of b moved.
    CHECK(*question_tvd(q, "A", rows, 50) == doctest::Approx(1.0 / 3.0));
    // Dropping unparseable: predictions {a, DK} vs truth {a, b, DK}.
    CHECK(*question_tvd(q, "A", rows, 50, {.keep_unparseable_as_category = false}) ==
          doctest::Approx(oracle::tvd_labels({{"a", 1.0 / 3}, {"b", 1.0 / 3}, {"dk", 1.0 / 3}},
                                             {{"a", 0.5}, {"dk", 0.5}})));
}

TEST_CASE("identical conditions give a null result") {
    Rng rng(4);
    auto panel = panels::null_panel(rng, 100, 5);
    for (auto &q : panel.questions) {
        q.predictions["B"] = q.predictions["A"];
    }
    const auto r = participant_bootstrap(panel, "A", "B", {.iterations = 500, .seed = 3});
    CHECK(r.mean_delta_tvd == 0.0);
    CHECK(r.ci_low <= 0.0);
    CHECK(r.ci_high >= 0.0);
    CHECK_FALSE(r.significant);
    CHECK(r.achieved_p == 1.0);
}

TEST_CASE("planted EchoTruth vs UniformRandom is detected with the right sign") {
    const auto panel = planted_panel(17);
    const auto r = participant_bootstrap(panel, "A", "B", {.iterations = 2000, .seed = 11});
    CHECK(r.mean_delta_tvd > 0.0);
    CHECK(r.ci_low > 0.0);
    CHECK(r.significant);
    CHECK(r.mean_tvd_b == doctest::Approx(0.0));
    CHECK(r.ci_low <= r.mean_delta_tvd);
    CHECK(r.mean_delta_tvd <= r.ci_high);
    CHECK(r.per_question_delta.size() == 5);
    CHECK(r.achieved_p < 0.05);

    const auto again = participant_bootstrap(panel, "A", "B", {.iterations = 2000, .seed = 11});
    CHECK(again.ci_low == r.ci_low);
    CHECK(again.ci_high == r.ci_high);
    CHECK(again.mean_delta_tvd == r.mean_delta_tvd);
    const auto serial = participant_bootstrap(panel, "A", "B", {.iterations = 2000, .seed = 11, .workers = 1});
    CHECK(serial.mean_delta_tvd == r.mean_delta_tvd);
}

TEST_CASE("1,000 and 5,000 iterations give close interval midpoints") {
    Rng rng(8);
    const auto panel = panels::null_panel(rng, 300, 5);
    const auto small = participant_bootstrap(panel, "A", "B", {.iterations = 1000, .seed = 1});
    const auto large = participant_bootstrap(panel, "A", "B", {.iterations = 5000, .seed = 2});
    CHECK(std::fabs((small.ci_low + small.ci_high) / 2 - (large.ci_low + large.ci_high) / 2) < 0.01);
}

TEST_CASE("null calibration on a reduced replication count") {
    // The acceptance suite runs the full 1,000 replications.
    const int reps = 200;
    int rejections = 0;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(SeedSequence(99).mix(static_cast<std::uint64_t>(rep)).value());
        const auto panel = panels::null_panel(rng, 120, 5);
        rejections += participant_bootstrap(panel, "A", "B", {.iterations = 400, .seed = static_cast<std::uint64_t>(rep)})
                          .significant;
    }
    const double rate = static_cast<double>(rejections) / reps;
    CHECK(rate > 0.0);
    CHECK(rate < 0.12);
}

TEST_CASE("bootstrap input validation") {
    Rng rng(2);
    auto panel = panels::null_panel(rng, 20, 2);
    panel.questions[1].predictions.erase("B");
    try {
        participant_bootstrap(panel, "A", "B", {.iterations = 10});
        FAIL("expected CoverageError");
    } catch (const CoverageError &e) {
        CHECK(std::string(e.what()).find("Q1") != std::string::npos);
    }
    CHECK_THROWS_AS(participant_bootstrap(panel, "A", "A", {.iterations = 0}), ConfigurationError);
    CHECK_THROWS_AS(participant_bootstrap(panel, "A", "A", {.confidence = 1.0}), ConfigurationError);
    auto tiny = panels::null_panel(rng, 1, 1);
    CHECK_THROWS_AS(participant_bootstrap(tiny, "A", "B", {.iterations = 10}), InsufficientDataError);
    panel.questions[0].truth.pop_back();
    CHECK_THROWS_AS(participant_bootstrap(panel, "A", "A", {.iterations = 10}), ValidationError);
}
