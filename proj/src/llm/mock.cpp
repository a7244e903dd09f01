#include "surveysim/llm/mock.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/random.hpp"
#include "surveysim/common/text.hpp"
#include "surveysim/llm/parse.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace surveysim::llm {

namespace {

template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string numeric_text(double value, const agents::TargetQuestion &target) {
    const double shown = target.mode == agents::ResponseMode::continuous_0_100
                             ? to_percent_scale(value, target.item.range())
                             : value;
    return text::format_number(std::round(shown));
}

std::string echo(const corpus::AnswerValue &truth, const agents::TargetQuestion &target) {
    if (truth.is_numeric()) {
        const double shown = target.mode == agents::ResponseMode::continuous_0_100
                                 ? to_percent_scale(truth.number(), target.item.range())
                                 : truth.number();
        return text::format_number(shown);
    }
    return truth.display();
}

} // namespace

std::string policy_name(const MockPolicy &policy) {
    return std::visit(overloaded{[](const EchoTruth &) { return std::string("echo_truth"); },
                                 [](const CentralTendency &) { return std::string("central_tendency"); },
                                 [](const HyperAccurate &) { return std::string("hyper_accurate"); },
                                 [](const UniformRandom &) { return std::string("uniform_random"); },
                                 [](const FixedLabel &) { return std::string("fixed_label"); }},
                      policy);
}

void check_policy(const MockPolicy &policy, const corpus::SurveyItem &item) {
    std::visit(overloaded{
                   [](const EchoTruth &) {},
                   [](const UniformRandom &) {},
                   [&](const CentralTendency &p) {
                       if (!(p.dispersion > 0.0)) {
                           throw ConfigurationError("central tendency dispersion must be positive");
                       }
                       if (item.is_numeric() &&
                           !(p.mean >= item.range().min && p.mean <= item.range().max)) {
                           throw ConfigurationError("central tendency mean outside the range of '" + item.code + "'");
                       }
                   },
                   [&](const HyperAccurate &p) {
                       if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0)) {
                           throw ConfigurationError("hyper-accurate accuracy must lie in [0, 1]");
                       }
                       if (!item.is_categorical() || !item.option_index(p.correct_label)) {
                           throw ConfigurationError("hyper-accurate label '" + p.correct_label +
                                                    "' is not an option of '" + item.code + "'");
                       }
                   },
                   [&](const FixedLabel &p) {
                       if (item.is_categorical()) {
                           if (!item.option_index(p.label)) {
                               throw ConfigurationError("fixed label '" + p.label + "' is not an option of '" +
                                                        item.code + "'");
                           }
                           return;
                       }
                       const auto v = text::parse_double(p.label);
                       if (!v || *v < item.range().min || *v > item.range().max) {
                           throw ConfigurationError("fixed label '" + p.label + "' is not a value of '" + item.code +
                                                    "'");
                       }
                   },
               },
               policy);
}

std::string simulate_mock(const agents::AgentProfile &profile, const agents::TargetQuestion &target,
                          const MockPolicy &policy, const corpus::AnswerValue &truth, std::uint64_t seed) {
    check_policy(policy, target.item);
    const auto &item = target.item;
    Rng rng = SeedSequence(seed).engine();
    auto require_truth = [&]() {
        if (truth.is_missing() && truth.reason() == corpus::MissingReason::unparseable) {
            throw ConfigurationError("policy " + policy_name(policy) + " needs the answer of '" +
                                     profile.respondent_id + "' to '" + item.code + "'");
        }
    };

    return std::visit(
        overloaded{
            [&](const EchoTruth &) {
                require_truth();
                return echo(truth, target);
            },
            [&](const HyperAccurate &p) {
                require_truth();
                return uniform01(rng) < p.accuracy ? p.correct_label : echo(truth, target);
            },
            [&](const FixedLabel &p) { return p.label; },
            [&](const UniformRandom &) {
                if (item.is_categorical()) {
                    return item.options()[uniform_index(rng, item.options().size())];
                }
                const auto &r = item.range();
                const auto lo = std::ceil(r.min);
                const auto span = static_cast<std::uint64_t>(std::floor(r.max) - lo) + 1;
                return numeric_text(lo + static_cast<double>(uniform_index(rng, span)), target);
            },
            [&](const CentralTendency &p) {
                if (item.is_numeric()) {
                    const auto &r = item.range();
                    const double draw = std::clamp(p.mean + p.dispersion * standard_normal(rng), r.min, r.max);
                    return numeric_text(draw, target);
                }
                const auto &options = item.options();
                const double centre = std::isnan(p.mean) ? (static_cast<double>(options.size()) - 1.0) / 2.0 : p.mean;
                std::vector<double> weights(options.size());
                for (std::size_t i = 0; i < options.size(); ++i) {
                    const double z = (static_cast<double>(i) - centre) / p.dispersion;
                    weights[i] = std::exp(-0.5 * z * z);
                }
                return options[weighted_index(rng, weights)];
            },
        },
        policy);
}

} // namespace surveysim::llm
