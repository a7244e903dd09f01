#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace surveysim::csv {

/// One parsed row plus the line number where it started.
struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

/// RFC 4180 reader: quoted fields, doubled quotes, embedded delimiters and newlines.
/// Blank lines are skipped. Throws ParseError on an unterminated quote.
std::vector<Row> read(std::istream &in, char delimiter = ',');

/// Quotes a field only when it contains the delimiter, a quote or a line break.
std::string escape(const std::string &field, char delimiter = ',');

void write_row(std::ostream &out, const std::vector<std::string> &fields, char delimiter = ',');

} // namespace surveysim::csv
