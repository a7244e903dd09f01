#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace surveysim::metrics {

/// Flat metric row consumed by the report generator.
struct MetricRecord {
    std::string question;
    std::string condition;
    std::string metric;
    double value = 0.0;
    std::size_t n = 0;

    bool operator==(const MetricRecord &) const = default;
};

/// Header: question,condition,metric,value,n. Values use round-trip formatting.
void write_metric_records(std::ostream &out, const std::vector<MetricRecord> &records);
std::vector<MetricRecord> read_metric_records(std::istream &in);

} // namespace surveysim::metrics
