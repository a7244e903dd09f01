#include "surveysim/metrics/records.hpp"

#include "surveysim/common/csv.hpp"
#include "surveysim/common/errors.hpp"
#include "surveysim/common/text.hpp"

#include <cmath>

namespace surveysim::metrics {

void write_metric_records(std::ostream &out, const std::vector<MetricRecord> &records) {
    csv::write_row(out, {"question", "condition", "metric", "value", "n"});
    for (const auto &r : records) {
        csv::write_row(out, {r.question, r.condition, r.metric,
                             std::isnan(r.value) ? "NA" : text::format_number(r.value),
                             std::to_string(r.n)});
    }
}

std::vector<MetricRecord> read_metric_records(std::istream &in) {
    auto rows = csv::read(in);
    std::vector<MetricRecord> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto &f = rows[i].fields;
        if (f.size() != 5) {
            throw ParseError("metric record needs 5 fields", rows[i].line);
        }
        MetricRecord r{f[0], f[1], f[2], 0.0, 0};
        if (f[3] == "NA") {
            r.value = std::nan("");
        } else if (auto v = text::parse_double(f[3])) {
            r.value = *v;
        } else {
            throw ParseError("metric value '" + f[3] + "' is not a number", rows[i].line);
        }
        auto n = text::parse_integer(f[4]);
        if (!n || *n < 0) {
            throw ParseError("metric n '" + f[4] + "' is not a count", rows[i].line);
        }
        r.n = static_cast<std::size_t>(*n);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace surveysim::metrics
