#include "surveysim/common/csv.hpp"

#include "surveysim/common/errors.hpp"

#include <iterator>

namespace surveysim::csv {

std::vector<Row> read(std::istream &in, char delimiter) {
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::vector<Row> rows;
    Row current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t quote_line = 0;
    current.line = line;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = current.fields.size() == 1 && current.fields[0].empty();
        if (!blank) {
            rows.push_back(std::move(current));
        }
        current = Row{};
        current.line = line;
    };

    std::size_t i = 0;
    if (data.size() >= 3 && data.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        i = 3;
    }
    for (; i < data.size(); ++i) {
        const char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
            quote_line = line;
        } else if (c == delimiter) {
            end_field();
        } else if (c == '\r') {
            continue;
        } else if (c == '\n') {
            ++line;
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) {
        throw ParseError("unterminated quoted field", quote_line);
    }
    if (field_started || !field.empty() || !current.fields.empty()) {
        end_row();
    }
    return rows;
}

std::string escape(const std::string &field, char delimiter) {
    if (field.find_first_of(std::string{delimiter} + "\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream &out, const std::vector<std::string> &fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out << delimiter;
        }
        out << escape(fields[i], delimiter);
    }
    out << '\n';
}

} // namespace surveysim::csv
