#include "surveysim/corpus/io.hpp"

#include "surveysim/common/csv.hpp"
#include "surveysim/common/errors.hpp"
#include "surveysim/common/text.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace surveysim::corpus {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path &path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

bool is_reserved(const std::string &key) {
    return key == kRespondentIdField || key == kCountryField || key == kAgeField ||
           key == kBirthYearField;
}

/// Converts one raw cell into an answer. Returns nullopt for "not asked / empty".
std::optional<AnswerValue> parse_cell(const std::string &raw, const SurveyItem &item,
                                      const LoadOptions &options, std::size_t line) {
    const auto cell = text::trim(raw);
    if (cell.empty()) {
        return std::nullopt;
    }
    if (auto it = options.missing_sentinels.find(cell); it != options.missing_sentinels.end()) {
        return AnswerValue::missing(it->second);
    }
    if (item.is_categorical()) {
        if (!item.option_index(cell)) {
            throw IntegrityError("line " + std::to_string(line) + ": item '" + item.code +
                                 "' has no option '" + cell + "'");
        }
        return AnswerValue::categorical(cell);
    }
    auto value = text::parse_double(cell);
    if (!value) {
        throw IntegrityError("line " + std::to_string(line) + ": numeric item '" + item.code +
                             "' got non-numeric answer '" + cell + "'");
    }
    AnswerValue answer = AnswerValue::numeric(*value);
    if (!answer.conforms_to(item)) {
        throw IntegrityError("line " + std::to_string(line) + ": item '" + item.code + "' value " +
                             cell + " outside its range");
    }
    return answer;
}

int resolve_age(const std::optional<std::string> &age, const std::optional<std::string> &birth_year,
                const LoadOptions &options, std::size_t line) {
    if (age && !text::trim(*age).empty()) {
        auto v = text::parse_integer(*age);
        if (!v) {
            throw ParseError("age '" + *age + "' is not an integer", line);
        }
        return static_cast<int>(*v);
    }
    if (birth_year && !text::trim(*birth_year).empty()) {
        auto v = text::parse_integer(*birth_year);
        if (!v) {
            throw ParseError("birth_year '" + *birth_year + "' is not an integer", line);
        }
        return options.reference_year - static_cast<int>(*v);
    }
    throw ParseError("record has neither age nor birth_year", line);
}

std::string json_scalar_to_string(const json &value, std::size_t line, const std::string &key) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number_integer()) {
        return std::to_string(value.get<long long>());
    }
    if (value.is_number()) {
        return text::format_number(value.get<double>());
    }
    if (value.is_null()) {
        return {};
    }
    throw ParseError("field '" + key + "' must be a string, number or null", line);
}

std::vector<RespondentRecord> read_delimited(std::istream &in, const Instrument &instrument,
                                             const LoadOptions &options) {
    auto rows = csv::read(in, options.delimiter);
    if (rows.empty()) {
        throw ParseError("respondent table has no header", 1);
    }
    const auto &header = rows.front().fields;
    std::optional<std::size_t> id_col, country_col, age_col, birth_col;
    std::vector<std::pair<std::size_t, const SurveyItem *>> item_cols;
    std::vector<std::string> unknown;
    std::set<std::string> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto name = text::trim(header[c]);
        if (!seen.insert(name).second) {
            throw ParseError("duplicate column '" + name + "'", rows.front().line);
        }
        if (name == kRespondentIdField) {
            id_col = c;
        } else if (name == kCountryField) {
            country_col = c;
        } else if (name == kAgeField) {
            age_col = c;
        } else if (name == kBirthYearField) {
            birth_col = c;
        } else if (const auto *item = instrument.find(name)) {
            item_cols.emplace_back(c, item);
        } else {
            unknown.push_back(name);
        }
    }
    if (!unknown.empty()) {
        throw IntegrityError("unknown item codes in header: " + text::join(unknown, ", "));
    }
    if (!id_col || !country_col || (!age_col && !birth_col)) {
        throw ParseError("header must contain respondent_id, country and age (or birth_year)",
                         rows.front().line);
    }

    std::vector<RespondentRecord> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto &row = rows[r];
        if (row.fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(row.fields.size()),
                             row.line);
        }
        RespondentRecord rec;
        rec.respondent_id = text::trim(row.fields[*id_col]);
        if (rec.respondent_id.empty()) {
            throw ParseError("empty respondent_id", row.line);
        }
        rec.country = text::trim(row.fields[*country_col]);
        auto field = [&](std::optional<std::size_t> col) -> std::optional<std::string> {
            return col ? std::optional<std::string>{row.fields[*col]} : std::nullopt;
        };
        rec.age = resolve_age(field(age_col), field(birth_col), options, row.line);
        for (const auto &[col, item] : item_cols) {
            if (auto answer = parse_cell(row.fields[col], *item, options, row.line)) {
                rec.answers.emplace(item->code, std::move(*answer));
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<RespondentRecord> read_record_json(std::istream &in, const Instrument &instrument,
                                               const LoadOptions &options) {
    std::vector<RespondentRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error &e) {
            throw ParseError(std::string{"invalid JSON: "} + e.what(), line_no);
        }
        if (!obj.is_object()) {
            throw ParseError("record must be a JSON object", line_no);
        }
        std::vector<std::string> unknown;
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!is_reserved(it.key()) && !instrument.contains(it.key())) {
                unknown.push_back(it.key());
            }
        }
        if (!unknown.empty()) {
            throw IntegrityError("line " + std::to_string(line_no) +
                                 ": unknown item codes: " + text::join(unknown, ", "));
        }
        auto get = [&](const char *key) -> std::optional<std::string> {
            auto it = obj.find(key);
            if (it == obj.end()) {
                return std::nullopt;
            }
            return json_scalar_to_string(*it, line_no, key);
        };
        RespondentRecord rec;
        auto id = get(kRespondentIdField);
        if (!id || text::trim(*id).empty()) {
            throw ParseError("record has no respondent_id", line_no);
        }
        rec.respondent_id = text::trim(*id);
        rec.country = text::trim(get(kCountryField).value_or(""));
        rec.age = resolve_age(get(kAgeField), get(kBirthYearField), options, line_no);
        // Instrument order, so the map contents do not depend on key order in the file.
        for (const auto &item : instrument.items()) {
            auto it = obj.find(item.code);
            if (it == obj.end()) {
                continue;
            }
            if (auto answer =
                    parse_cell(json_scalar_to_string(*it, line_no, item.code), item, options, line_no)) {
                rec.answers.emplace(item.code, std::move(*answer));
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace

RespondentFormat respondent_format_from_string(const std::string &name) {
    if (name == "delimited_table" || name == "csv") {
        return RespondentFormat::delimited_table;
    }
    if (name == "record_json" || name == "jsonl") {
        return RespondentFormat::record_json;
    }
    throw ConfigurationError("unknown respondent format '" + name + "'");
}

std::string to_string(RespondentFormat format) {
    return format == RespondentFormat::delimited_table ? "delimited_table" : "record_json";
}

Instrument read_instrument(std::istream &in) {
    std::vector<SurveyItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        try {
            auto obj = json::parse(line);
            SurveyItem item;
            item.code = obj.at("code").get<std::string>();
            item.question_text = obj.value("text", std::string{});
            item.section = obj.value("section", std::string{});
            item.reverse_coded = obj.value("reverse_coded", false);
            const auto kind = obj.at("kind").get<std::string>();
            if (kind == "categorical") {
                item.kind = CategoricalKind{obj.at("options").get<std::vector<std::string>>()};
            } else if (kind == "numeric") {
                auto range = obj.at("range").get<std::vector<double>>();
                if (range.size() != 2) {
                    throw ParseError("numeric range must have two entries", line_no);
                }
                item.kind = NumericKind{range[0], range[1]};
            } else {
                throw ParseError("unknown item kind '" + kind + "'", line_no);
            }
            items.push_back(std::move(item));
        } catch (const json::exception &e) {
            throw ParseError(std::string{"invalid instrument record: "} + e.what(), line_no);
        }
    }
    try {
        return Instrument{std::move(items)};
    } catch (const ValidationError &e) {
        throw ParseError(e.what());
    }
}

Instrument load_instrument(const std::filesystem::path &path) {
    auto in = open_input(path);
    return read_instrument(in);
}

void write_instrument(std::ostream &out, const Instrument &instrument) {
    for (const auto &item : instrument.items()) {
        json obj;
        obj["code"] = item.code;
        obj["text"] = item.question_text;
        if (item.is_categorical()) {
            obj["kind"] = "categorical";
            obj["options"] = item.options();
        } else {
            obj["kind"] = "numeric";
            obj["range"] = {item.range().min, item.range().max};
        }
        obj["section"] = item.section;
        obj["reverse_coded"] = item.reverse_coded;
        out << obj.dump() << '\n';
    }
}

std::vector<RespondentRecord> read_respondents(std::istream &in, const Instrument &instrument,
                                               RespondentFormat format, const LoadOptions &options) {
    return format == RespondentFormat::delimited_table ? read_delimited(in, instrument, options)
                                                       : read_record_json(in, instrument, options);
}

void write_respondents(std::ostream &out, const SurveyCorpus &corpus, RespondentFormat format,
                       char delimiter) {
    const auto &items = corpus.instrument.items();
    if (format == RespondentFormat::delimited_table) {
        std::vector<std::string> header{kRespondentIdField, kCountryField, kAgeField};
        for (const auto &item : items) {
            header.push_back(item.code);
        }
        csv::write_row(out, header, delimiter);
        for (const auto &r : corpus.respondents) {
            std::vector<std::string> row{r.respondent_id, r.country, std::to_string(r.age)};
            for (const auto &item : items) {
                const auto *a = r.find(item.code);
                row.push_back(a == nullptr ? std::string{} : a->display());
            }
            csv::write_row(out, row, delimiter);
        }
        return;
    }
    for (const auto &r : corpus.respondents) {
        json obj = json::object();
        obj[kRespondentIdField] = r.respondent_id;
        obj[kCountryField] = r.country;
        obj[kAgeField] = r.age;
        for (const auto &item : items) {
            const auto *a = r.find(item.code);
            if (a == nullptr) {
                continue;
            }
            if (a->is_numeric()) {
                obj[item.code] = a->number();
            } else {
                obj[item.code] = a->display();
            }
        }
        out << obj.dump() << '\n';
    }
}

SurveyCorpus load_corpus(const std::filesystem::path &instrument_path,
                         const std::filesystem::path &respondents_path, RespondentFormat format,
                         const LoadOptions &options) {
    SurveyCorpus corpus;
    corpus.instrument = load_instrument(instrument_path);
    auto in = open_input(respondents_path);
    corpus.respondents = read_respondents(in, corpus.instrument, format, options);
    corpus.provenance =
        options.provenance.empty() ? respondents_path.filename().string() : options.provenance;
    corpus.validate();
    return corpus;
}

void save_corpus(const SurveyCorpus &corpus, const std::filesystem::path &instrument_path,
                 const std::filesystem::path &respondents_path, RespondentFormat format) {
    {
        auto out = open_output(instrument_path);
        write_instrument(out, corpus.instrument);
    }
    auto out = open_output(respondents_path);
    write_respondents(out, corpus, format);
}

std::vector<ReferenceDistribution> read_references(std::istream &in, char delimiter) {
    auto rows = csv::read(in, delimiter);
    if (rows.empty()) {
        return {};
    }
    const std::vector<std::string> expected{"item_code", "stratum", "option_label", "proportion"};
    std::vector<std::string> header;
    for (const auto &f : rows.front().fields) {
        header.push_back(text::trim(f));
    }
    if (header != expected) {
        throw ParseError("reference header must be item_code,stratum,option_label,proportion",
                         rows.front().line);
    }
    std::vector<ReferenceDistribution> refs;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto &row = rows[r];
        if (row.fields.size() != 4) {
            throw ParseError("expected 4 fields", row.line);
        }
        auto p = text::parse_double(row.fields[3]);
        if (!p) {
            throw ParseError("proportion '" + row.fields[3] + "' is not a number", row.line);
        }
        auto key = std::make_pair(text::trim(row.fields[0]), text::trim(row.fields[1]));
        auto [it, inserted] = index.emplace(key, refs.size());
        if (inserted) {
            refs.push_back(ReferenceDistribution{key.first, key.second, {}});
        }
        auto &ref = refs[it->second];
        const auto label = text::trim(row.fields[2]);
        if (ref.share(label)) {
            throw ParseError("duplicate option '" + label + "' for " + key.first + "/" + key.second,
                             row.line);
        }
        ref.frequencies.emplace_back(label, *p);
    }
    for (const auto &ref : refs) {
        ref.validate();
    }
    return refs;
}

std::vector<ReferenceDistribution> load_references(const std::filesystem::path &path) {
    auto in = open_input(path);
    return read_references(in);
}

void write_references(std::ostream &out, const std::vector<ReferenceDistribution> &refs) {
    csv::write_row(out, {"item_code", "stratum", "option_label", "proportion"});
    for (const auto &ref : refs) {
        for (const auto &[label, p] : ref.frequencies) {
            csv::write_row(out, {ref.item_code, ref.stratum, label, text::format_number(p)});
        }
    }
}

} // namespace surveysim::corpus
