#include <doctest.h>

#include "surveysim/fixtures/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

using namespace surveysim;

TEST_CASE("share_like is deterministic and well formed") {
    const auto a = fixtures::share_like(400, 11);
    const auto b = fixtures::share_like(400, 11);
    REQUIRE(a.respondents.size() == 400);
    CHECK(a.respondents == b.respondents);
    CHECK_FALSE(a.respondents == fixtures::share_like(400, 12).respondents);

    std::size_t answered = 0, correct = 0, missing = 0;
    for (const auto &r : a.respondents) {
        CHECK(r.age >= 50);
        CHECK(r.age <= 94);
        for (const auto &code : fixtures::kShareTargets) {
            REQUIRE(a.instrument.contains(code));
        }
        for (const auto &[code, value] : r.answers) {
            const auto &item = a.instrument.at(code);
            if (value.is_missing()) {
                continue;
            }
            if (item.is_numeric()) {
                CHECK(value.number() >= item.range().min);
                CHECK(value.number() <= item.range().max);
            } else {
                const auto &opts = item.options();
                CHECK(std::find(opts.begin(), opts.end(), value.label()) != opts.end());
            }
        }
        const auto &fk = r.answers.at("cf015_");
        if (fk.is_missing()) {
            ++missing;
        } else {
            ++answered;
            correct += fk.label() == fixtures::kCompoundInterestAnswer;
        }
    }
    const double share = static_cast<double>(correct) / static_cast<double>(answered);
    CHECK(share > 0.3);
    CHECK(share < 0.6);
    CHECK(static_cast<double>(missing) / 400.0 < 0.15);
}

TEST_CASE("every sampled age has a target-age rule") {
    const auto rules = fixtures::share_age_rules();
    for (int age = 50; age <= 110; ++age) {
        const auto hits = std::count_if(rules.begin(), rules.end(), [&](const auto &r) { return age >= r.lo && age <= r.hi; });
        CHECK(hits == 1);
    }
}

TEST_CASE("reference shares sum to one per item and country") {
    const auto refs = fixtures::eurobarometer_like_references({"Spain", "France"});
    CHECK(refs.size() == 2 * fixtures::eurobarometer_like_instrument().items().size());
    for (const auto &ref : refs) {
        double total = 0.0;
        for (const auto &[label, p] : ref.frequencies) {
            total += p;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("gss_like scales recover the planted structure") {
    const auto c = fixtures::gss_like(2000, 5);
    const auto scales = fixtures::retirement_scales();
    std::size_t items = 0;
    for (const auto &s : scales) {
        items += s.item_codes.size();
    }
    CHECK(items == 22);
    psychometrics::ResponseMatrix m;
    for (const auto &s : scales) {
        m.item_codes.insert(m.item_codes.end(), s.item_codes.begin(), s.item_codes.end());
    }
    m.values.resize(static_cast<Eigen::Index>(c.respondents.size()), static_cast<Eigen::Index>(m.item_codes.size()));
    for (std::size_t i = 0; i < c.respondents.size(); ++i) {
        m.agent_ids.push_back(c.respondents[i].respondent_id);
        for (std::size_t j = 0; j < m.item_codes.size(); ++j) {
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                c.respondents[i].answers.at(m.item_codes[j]).number();
        }
    }
    const auto scores = psychometrics::score_scales(m, scales);
    const auto fit = psychometrics::hierarchical_regression(scores);
    CHECK(fit.terms.at(0).b > 0.0);
    CHECK(fit.terms.at(1).b > 0.0);
    CHECK(fit.terms.at(6).b < 0.0);
    CHECK(fit.terms.at(6).p < 0.05);
}
