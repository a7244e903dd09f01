#include "internal.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/metrics/distribution.hpp"
#include "surveysim/metrics/fidelity.hpp"

#include <algorithm>
#include <set>

namespace surveysim::study::detail {

void assemble_country(const StudyPlan &plan, const std::vector<llm::PredictionRecord> &records, EvalReport &report) {
    const auto &cfg = plan.config;
    const auto finals = final_predictions(records);

    std::set<std::string> countries = cfg.countries;
    if (countries.empty()) {
        for (const auto &r : plan.corpus.respondents) {
            countries.insert(r.country);
        }
    }

    // Align every prediction first so a mapping problem surfaces before any number is reported.
    std::set<std::string> unmatched;
    std::map<std::tuple<std::string, std::string, std::string>, std::map<std::string, std::size_t>> counts;
    for (const auto &spec : cfg.targets) {
        std::map<std::string, const corpus::ReferenceDistribution *> refs;
        for (const auto &ref : plan.references) {
            if (ref.item_code == spec.code) {
                refs[ref.stratum] = &ref;
            }
        }
        for (const auto &r : plan.corpus.respondents) {
            for (const auto &c : report.conditions) {
                auto it = finals.find({r.respondent_id, spec.code, c});
                if (it == finals.end() || !it->second.is_categorical()) {
                    continue;
                }
                auto label = it->second.label();
                if (auto m = cfg.label_map.find(label); m != cfg.label_map.end()) {
                    label = m->second;
                }
                const auto *ref = refs.at(r.country);
                const bool known = std::any_of(ref->frequencies.begin(), ref->frequencies.end(),
                                               [&](const auto &f) { return f.first == label; });
                if (!known) {
                    unmatched.insert(spec.code + ": " + label);
                    continue;
                }
                ++counts[{spec.code, r.country, c}][label];
            }
        }
    }
    if (!unmatched.empty()) {
        throw LabelMappingError("simulated answers vs reference options", {unmatched.begin(), unmatched.end()});
    }

    for (const auto &spec : cfg.targets) {
        for (const auto &c : report.conditions) {
            double tvd_sum = 0.0;
            std::size_t tvd_n = 0;
            for (const auto &country : countries) {
                const auto ref_it = std::find_if(plan.references.begin(), plan.references.end(), [&](const auto &r) {
                    return r.item_code == spec.code && r.stratum == country;
                });
                const auto &ref = *ref_it;
                const auto &cell = counts[{spec.code, country, c}];
                std::size_t total = 0;
                for (const auto &[label, n] : cell) {
                    total += n;
                }
                if (total == 0) {
                    report.failures.push_back({spec.code, c, "no parsed predictions for country '" + country + "'"});
                    continue;
                }
                double ref_total = 0.0;
                for (const auto &f : ref.frequencies) {
                    ref_total += f.second;
                }
                std::vector<std::string> labels;
                std::vector<double> sim, refp;
                for (const auto &[label, share] : ref.frequencies) {
                    const auto n = cell.contains(label) ? cell.at(label) : 0;
                    labels.push_back(label);
                    sim.push_back(static_cast<double>(n) / static_cast<double>(total));
                    refp.push_back(share / ref_total);
                    report.country_rows.push_back({spec.code, country, c, label, sim.back(), refp.back(), total});
                }
                const double tvd = metrics::tvd_discrete(metrics::DistributionSummary::from_masses(labels, sim, total),
                                                         metrics::DistributionSummary::from_masses(labels, refp));
                report.metrics.push_back({spec.code, c, "tvd:" + country, tvd, total});
                tvd_sum += tvd;
                ++tvd_n;
            }
            if (tvd_n) {
                report.metrics.push_back({spec.code, c, "tvd_mean", tvd_sum / static_cast<double>(tvd_n), tvd_n});
            }
        }
    }
}

} // namespace surveysim::study::detail
