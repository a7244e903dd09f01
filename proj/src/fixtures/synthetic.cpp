#include "surveysim/fixtures/synthetic.hpp"

#include "surveysim/common/random.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace surveysim::fixtures {

using corpus::AnswerValue;
using corpus::CategoricalKind;
using corpus::MissingReason;
using corpus::NumericKind;
using corpus::SurveyItem;

namespace {

/// Option index from a latent value and ascending cut points.
std::size_t ordinal(double latent, std::initializer_list<double> cuts) {
    std::size_t k = 0;
    for (double c : cuts) {
        if (latent > c) {
            ++k;
        }
    }
    return k;
}

AnswerValue option(const SurveyItem &item, std::size_t index) {
    const auto &opts = item.options();
    return AnswerValue::categorical(opts[std::min(index, opts.size() - 1)]);
}

double clamp_round(double v, double lo, double hi) {
    return std::clamp(std::round(v), lo, hi);
}

std::vector<SurveyItem> share_items() {
    const std::vector<std::string> health{"Excellent", "Very good", "Good", "Fair", "Poor"};
    const std::vector<std::string> frequency{"Never", "Rarely", "Sometimes", "Often", "Always"};
    return {
        {"DN042", "Note sex of respondent from observation (ask if unsure)", CategoricalKind{{"Male", "Female"}}, "DN",
         false},
        {"EP005", "In general, which of the following best describes your current employment situation?",
         CategoricalKind{{"Retired", "Employed or self-employed", "Unemployed", "Permanently sick or disabled",
                          "Homemaker", "Other"}},
         "EP", false},
        {"DN014", "What is your marital status?",
         CategoricalKind{{"Married and living together with spouse", "Registered partnership",
                          "Married, living separated from spouse", "Never married", "Divorced", "Widowed"}},
         "DN", false},
        {"CO007",
         "Thinking of your household's total monthly income, would you say that your household is able to make "
         "ends meet...",
         CategoricalKind{{"With great difficulty", "With some difficulty", "Fairly easily", "Easily"}}, "CO", false},
        {"DN041", "How many years have you been in full-time education?", NumericKind{0, 30}, "DN", false},
        {"PH003", "Would you say your health is...", CategoricalKind{health}, "PH", false},
        {"MH002", "In the last month, have you been sad or depressed?", CategoricalKind{{"Yes", "No"}}, "MH", false},
        {"AC012", "On a scale from 0 to 10, how satisfied are you with your life?", NumericKind{0, 10}, "AC", false},
        {"CF103", "How would you rate your memory at the present time?", CategoricalKind{health}, "CF", false},
        {"HC889", "How often do you need help reading medical instructions?", CategoricalKind{frequency}, "HC", false},
        {"AS641", "Do you currently have any stocks or shares (listed or unlisted on stock market)?",
         CategoricalKind{{"Yes", "No"}}, "AS", false},
        {"cf011_", "How would you rate your ability to work with numbers in everyday life?", CategoricalKind{health},
         "CF", false},
        {"cf012_",
         "If the chance of getting a disease is 10 percent, how many people out of 1000 (one thousand) would be "
         "expected to get the disease?",
         CategoricalKind{{"100", "10", "90", "900", "Other answer"}}, "CF", false},
        {"cf013_",
         "In a sale, a shop is selling all items at half price. Before the sale, a sofa costs 300 [FLCurr]. How much "
         "will it cost in the sale?",
         CategoricalKind{{"150", "600", "Other answer"}}, "CF", false},
        {"cf014_",
         "A second hand car dealer is selling a car for 6,000 [FLCurr]. This is two-thirds of what it costs new. How "
         "much did the car cost new?",
         CategoricalKind{{"9,000", "4,000", "8,000", "12,000", "18,000", "Other answer"}}, "CF", false},
        {"cf108_", "Now let's try some subtraction of numbers. One hundred minus 7 equals what?", NumericKind{0, 100},
         "CF", false},
        {"cf109_", "And 7 from that", NumericKind{0, 100}, "CF", false},
        {"cf110_", "And 7 from that (third subtraction)", NumericKind{0, 100}, "CF", false},
        {"cf111_", "And 7 from that (fourth subtraction)", NumericKind{0, 100}, "CF", false},
        {"cf112_", "And 7 from that (fifth subtraction)", NumericKind{0, 100}, "CF", false},
        {"FTP01", "What are the chances that you will live to age XX or more?", NumericKind{0, 100}, "EX", false},
        {"FTP02",
         "Thinking about your work generally and not just your present job, what are the chances that you will be "
         "working full-time after you reach age 63?",
         NumericKind{0, 100}, "EX", false},
        {"FTP03", "In planning your saving and spending, which of the following time periods is most important to you?",
         CategoricalKind{{"Next few months", "Next year", "Next few years", "Next 5-10 years",
                          "Longer than 10 years"}},
         "FT", false},
        {"FRT01",
         "Which of the statements on the card comes closest to the amount of financial risk that you are willing to "
         "take when you save or make investments?",
         CategoricalKind{{"Take substantial financial risks expecting to earn substantial returns",
                          "Take above average financial risks expecting to earn above average returns",
                          "Take average financial risks expecting to earn average returns",
                          "Not willing to take any financial risks"}},
         "FT", false},
        {"cf015_",
         "Let's say you have 2000 [FLCurr] in a savings account. The account earns ten per cent interest each year. "
         "How much would you have in the account at the end of two years?",
         CategoricalKind{{"2420", "2400", "2200", "Other answer"}}, "CF", false},
    };
}

} // namespace

std::vector<agents::AgeRule> share_age_rules() {
    return {{0, 65, 75}, {66, 69, 80}, {70, 74, 85}, {75, 79, 90}, {80, 84, 95}, {85, 89, 100}, {90, 94, 105},
            {95, 130, 110}};
}

corpus::SurveyCorpus share_like(std::size_t n, std::uint64_t seed) {
    corpus::SurveyCorpus c;
    c.instrument = corpus::Instrument(share_items());
    c.provenance = fmt::format("synthetic share_like(n={}, seed={})", n, seed);
    const auto &ins = c.instrument;
    const std::vector<std::string> countries{"Spain", "France", "Germany"};
    Rng rng = SeedSequence(seed).mix("share_like").engine();
    for (std::size_t i = 0; i < n; ++i) {
        corpus::RespondentRecord r;
        r.respondent_id = fmt::format("SH{:05d}", i);
        r.country = countries[static_cast<std::size_t>(uniform_index(rng, countries.size()))];
        r.age = 50 + static_cast<int>(uniform_index(rng, 45));
        const double health = standard_normal(rng) - 0.03 * (r.age - 70);
        const double wealth = standard_normal(rng);
        const double numeracy = 0.4 * wealth + standard_normal(rng);
        const double risk = 0.5 * wealth + standard_normal(rng);
        const double horizon = 0.4 * health + 0.3 * wealth + standard_normal(rng);
        auto &a = r.answers;
        a["DN042"] = option(ins.at("DN042"), uniform_index(rng, 2));
        const bool retired = r.age >= 63 ? uniform01(rng) < 0.85 : uniform01(rng) < 0.15;
        a["EP005"] = retired ? option(ins.at("EP005"), 0) : option(ins.at("EP005"), 1 + uniform_index(rng, 5));
        a["DN014"] = option(ins.at("DN014"), uniform01(rng) < 0.6 ? 0 : uniform_index(rng, 6));
        a["CO007"] = option(ins.at("CO007"), ordinal(wealth + 0.5 * standard_normal(rng), {-1.0, -0.2, 0.7}));
        a["DN041"] = AnswerValue::numeric(clamp_round(11 + 3 * numeracy + standard_normal(rng), 0, 30));
        a["PH003"] = option(ins.at("PH003"), 4 - ordinal(health + 0.5 * standard_normal(rng), {-1.2, -0.3, 0.5, 1.3}));
        a["MH002"] = option(ins.at("MH002"), health + standard_normal(rng) < -0.8 ? 0 : 1);
        a["AC012"] = AnswerValue::numeric(clamp_round(7 + 1.2 * health + 0.8 * wealth + standard_normal(rng), 0, 10));
        a["CF103"] = option(ins.at("CF103"), 4 - ordinal(numeracy + 0.3 * health + standard_normal(rng), {-1.5, -0.5, 0.5, 1.5}));
        a["HC889"] = option(ins.at("HC889"), 4 - ordinal(numeracy + 0.8 * standard_normal(rng), {-1.5, -0.8, 0.0, 0.8}));
        a["AS641"] = option(ins.at("AS641"), risk + 0.5 * standard_normal(rng) > 0.8 ? 0 : 1);
        a["cf011_"] = option(ins.at("cf011_"), 4 - ordinal(numeracy + 0.7 * standard_normal(rng), {-1.4, -0.5, 0.4, 1.3}));
        a["cf012_"] = option(ins.at("cf012_"), numeracy + 0.5 * standard_normal(rng) > -0.6 ? 0 : 1 + uniform_index(rng, 4));
        a["cf013_"] = option(ins.at("cf013_"), numeracy + 0.5 * standard_normal(rng) > -1.2 ? 0 : 1 + uniform_index(rng, 2));
        a["cf014_"] = option(ins.at("cf014_"), numeracy + 0.5 * standard_normal(rng) > 0.3 ? 0 : 1 + uniform_index(rng, 5));
        double value = 100;
        bool on_track = true;
        for (const char *code : {"cf108_", "cf109_", "cf110_", "cf111_", "cf112_"}) {
            on_track = on_track && numeracy + standard_normal(rng) > -1.5;
            value -= on_track ? 7 : 7 + static_cast<double>(uniform_index(rng, 5)) - 2;
            a[code] = AnswerValue::numeric(clamp_round(value, 0, 100));
        }

        const double live = 55 + 18 * health - 0.4 * (r.age - 70) + 12 * standard_normal(rng);
        a["FTP01"] = AnswerValue::numeric(clamp_round(live / 10, 0, 10) * 10);
        const double work = retired ? 5 * std::fabs(standard_normal(rng)) : 45 + 20 * horizon + 20 * standard_normal(rng);
        a["FTP02"] = AnswerValue::numeric(clamp_round(work / 10, 0, 10) * 10);
        a["FTP03"] = option(ins.at("FTP03"), ordinal(horizon + 0.6 * standard_normal(rng), {-1.3, -0.5, 0.3, 1.1}));
        a["FRT01"] = option(ins.at("FRT01"), 3 - ordinal(risk + 0.5 * standard_normal(rng), {0.2, 1.1, 2.2}));
        const double u = uniform01(rng);
        if (u < 0.05) {
            a["cf015_"] = AnswerValue::missing(MissingReason::dont_know);
        } else if (u < 0.08) {
            a["cf015_"] = AnswerValue::missing(MissingReason::refusal);
        } else {
            const double skill = numeracy + 0.8 * standard_normal(rng);
            a["cf015_"] = option(ins.at("cf015_"), skill > 0.1 ? 0 : (skill > -0.6 ? 2 : 1 + 2 * uniform_index(rng, 2)));
        }
        c.respondents.push_back(std::move(r));
    }
    return c;
}

corpus::Instrument eurobarometer_like_instrument() {
    const std::vector<std::string> agree{"Totally agree", "Tend to agree", "Tend to disagree", "Totally disagree"};
    return corpus::Instrument({
        {"EUBAR-FTP01",
         "If you lost your main source of income today, how long could you continue to cover your living expenses, "
         "without borrowing any money or moving house?",
         CategoricalKind{{"Less than a week", "At least a week, but not one month", "At least one month, but not three months",
                          "At least three months, but not six months", "Six months or more"}},
         "EB", false},
        {"EUBAR-FTP02",
         "Overall, how confident are you that you will have enough money to live comfortably throughout your "
         "retirement years?",
         CategoricalKind{{"Very confident", "Fairly confident", "Not very confident", "Not at all confident"}}, "EB",
         false},
        {"EUBAR-FRT01",
         "To what extent do you agree or disagree with the following statement? Before I buy something, I carefully "
         "consider whether I can afford it.",
         CategoricalKind{agree}, "EB", false},
        {"EUBAR-FK01",
         "Imagine that someone puts €100 into a savings account with a guaranteed interest rate of 2% per year. "
         "They don't make any further payments into this account and they don't withdraw any money. How much would "
         "be in the account at the end of five years?",
         CategoricalKind{{"Less than €102", "Exactly €102", "Between €102 and €110",
                          "More than €110"}},
         "EB", false},
        {"EUBAR-FK02",
         "Now imagine the following situation. You are going to be given a gift of €1,000 in one year and, over "
         "that year, inflation stays at 2%. In one year's time, with the €1,000, will you be able to buy:",
         CategoricalKind{{"More than today", "The same amount", "Less than today"}}, "EB", false},
    });
}

std::vector<corpus::ReferenceDistribution> eurobarometer_like_references(const std::vector<std::string> &countries) {
    const auto instrument = eurobarometer_like_instrument();
    std::vector<corpus::ReferenceDistribution> out;
    for (std::size_t ci = 0; ci < countries.size(); ++ci) {
        for (const auto &item : instrument.items()) {
            const auto &opts = item.options();
            // Smooth, country-shifted shares that sum to one exactly.
            std::vector<double> w;
            for (std::size_t k = 0; k < opts.size(); ++k) {
                w.push_back(1.0 + static_cast<double>((k + ci) % opts.size()));
            }
            double total = 0.0;
            for (double v : w) {
                total += v;
            }
            corpus::ReferenceDistribution ref{item.code, countries[ci], {}};
            for (std::size_t k = 0; k < opts.size(); ++k) {
                ref.frequencies.emplace_back(opts[k], w[k] / total);
            }
            out.push_back(std::move(ref));
        }
    }
    return out;
}

corpus::DemographicItems gss_demographics() {
    return {"SEX", "WRKSTAT", "MARITAL", "INCOME", "EDUC"};
}

std::vector<psychometrics::ScaleDefinition> retirement_scales() {
    return {
        {"KFP", {"KFP1", "KFP2", "KFP3", "KFP4", "KFP5", "KFP6"}, std::vector<bool>(6, false), 1, 7},
        {"FTP", {"FTP1", "FTP2", "FTP3", "FTP4", "FTP5", "FTP6"}, {false, false, true, true, true, true}, 1, 7},
        {"FRT", {"FRT1", "FRT2", "FRT3", "FRT4", "FRT5"}, std::vector<bool>(5, false), 1, 7},
        {"RS", {"RS1", "RS2", "RS3", "RS4", "RS5"}, std::vector<bool>(5, false), 1, 7},
    };
}

corpus::SurveyCorpus gss_like(std::size_t n, std::uint64_t seed) {
    const std::vector<std::string> texts{
        "I am very knowledgeable about financial planning for retirement.",
        "I know more than most people about retirement planning.",
        "I am very confident in my ability to do retirement planning.",
        "When I have a need for financial services, I know exactly where to obtain information on what to do.",
        "I am knowledgeable about how Social Security works.",
        "I am knowledgeable about how private investment plans work.",
        "I follow the advice to save for a rainy day.",
        "I enjoy thinking about how I will live years from now in the future.",
        "The distant future is too uncertain to plan for.",
        "The future seems very vague and uncertain to me.",
        "I pretty much live on a day-to-day basis.",
        "I enjoy living for the moment and not knowing what tomorrow will bring.",
        "I am willing to risk financial losses.",
        "I prefer investments that have higher returns even though they are riskier.",
        "The overall growth potential of a retirement investment is more important than the level of risk of the "
        "investment.",
        "I am very willing to make risky investments to ensure financial stability in retirement.",
        "As a rule, I would never choose the safest investment when planning for retirement.",
        "Made meaningful contributions to a voluntary retirement savings plan.",
        "Relative to my peers, I have saved a great deal for retirement.",
        "Accumulated substantial savings for retirement.",
        "Made a conscious effort to save for retirement.",
        "Based on how I plan to live my life in retirement, I have saved accordingly.",
    };
    const auto scales = retirement_scales();
    std::vector<SurveyItem> items{
        {"SEX", "Respondent's sex", CategoricalKind{{"Male", "Female"}}, "GSS", false},
        {"WRKSTAT", "Last week were you working full time, part time, going to school, keeping house, or what?",
         CategoricalKind{{"Working full time", "Working part time", "Unemployed", "Retired", "Keeping house", "Other"}},
         "GSS", false},
        {"MARITAL", "Are you currently married, widowed, divorced, separated, or have you never been married?",
         CategoricalKind{{"Married", "Widowed", "Divorced", "Separated", "Never married"}}, "GSS", false},
        {"INCOME", "In which of these groups did your total family income, from all sources, fall last year?",
         CategoricalKind{{"Under $25,000", "$25,000 to $49,999", "$50,000 to $89,999", "$90,000 or over"}}, "GSS",
         false},
        {"EDUC", "What is the highest grade in elementary school or high school that you finished and got credit for?",
         NumericKind{0, 20}, "GSS", false},
        {"SATFIN", "So far as you and your family are concerned, would you say that you are pretty well satisfied with "
                   "your present financial situation, more or less satisfied, or not satisfied at all?",
         CategoricalKind{{"Pretty well satisfied", "More or less satisfied", "Not satisfied at all"}}, "GSS", false},
        {"FINRELA", "Compared with American families in general, would you say your family income is far below "
                    "average, below average, average, above average, or far above average?",
         CategoricalKind{{"Far below average", "Below average", "Average", "Above average", "Far above average"}},
         "GSS", false},
        {"HAPPY", "Taken all together, how would you say things are these days?",
         CategoricalKind{{"Very happy", "Pretty happy", "Not too happy"}}, "GSS", false},
    };
    std::size_t t = 0;
    for (const auto &scale : scales) {
        for (std::size_t k = 0; k < scale.item_codes.size(); ++k) {
            items.push_back({scale.item_codes[k], texts[t++], NumericKind{1, 7}, scale.name, bool(scale.reverse_flags[k])});
        }
    }
    corpus::SurveyCorpus c;
    c.instrument = corpus::Instrument(std::move(items));
    c.provenance = fmt::format("synthetic gss_like(n={}, seed={})", n, seed);
    const auto &ins = c.instrument;
    Rng rng = SeedSequence(seed).mix("gss_like").engine();
    for (std::size_t i = 0; i < n; ++i) {
        corpus::RespondentRecord r;
        r.respondent_id = fmt::format("GS{:05d}", i);
        r.country = "United States";
        r.age = 25 + static_cast<int>(uniform_index(rng, 50));
        const double wealth = standard_normal(rng);
        const double k = 0.5 * wealth + std::sqrt(0.75) * standard_normal(rng);
        const double f = standard_normal(rng);
        const double rk = 0.3 * wealth + std::sqrt(0.91) * standard_normal(rng);
        const double s = 0.5 * k + 0.25 * f + 0.15 * rk - 0.2 * k * f * rk + 0.6 * standard_normal(rng);
        auto &a = r.answers;
        a["SEX"] = option(ins.at("SEX"), uniform_index(rng, 2));
        a["WRKSTAT"] = option(ins.at("WRKSTAT"), r.age >= 65 ? 3 : (uniform01(rng) < 0.7 ? 0 : 1 + uniform_index(rng, 5)));
        a["MARITAL"] = option(ins.at("MARITAL"), uniform01(rng) < 0.5 ? 0 : uniform_index(rng, 5));
        a["INCOME"] = option(ins.at("INCOME"), ordinal(wealth + 0.4 * standard_normal(rng), {-0.8, 0.0, 0.9}));
        a["EDUC"] = AnswerValue::numeric(clamp_round(13 + 2.5 * k + standard_normal(rng), 0, 20));
        a["SATFIN"] = option(ins.at("SATFIN"), 2 - ordinal(wealth + s * 0.5 + 0.6 * standard_normal(rng), {-0.7, 0.6}));
        a["FINRELA"] = option(ins.at("FINRELA"), ordinal(wealth + 0.5 * standard_normal(rng), {-1.4, -0.5, 0.6, 1.5}));
        a["HAPPY"] = option(ins.at("HAPPY"), 2 - ordinal(0.3 * wealth + standard_normal(rng), {-1.0, 0.6}));
        const std::map<std::string, double> latent{{"KFP", k}, {"FTP", f}, {"FRT", rk}, {"RS", s}};
        for (const auto &scale : scales) {
            for (std::size_t j = 0; j < scale.item_codes.size(); ++j) {
                double v = 4 + 1.3 * latent.at(scale.name) + 0.7 * standard_normal(rng);
                if (scale.reverse_flags[j]) {
                    v = 8 - v;
                }
                a[scale.item_codes[j]] = AnswerValue::numeric(clamp_round(v, 1, 7));
            }
        }
        c.respondents.push_back(std::move(r));
    }
    return c;
}

} // namespace surveysim::fixtures
