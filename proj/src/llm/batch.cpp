#include "surveysim/llm/batch.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/parallel.hpp"
#include "surveysim/common/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace surveysim::llm {

using corpus::AnswerValue;
using nlohmann::json;

std::string to_string(Aggregation a) { return a == Aggregation::single ? "single" : "majority"; }

Aggregation aggregation_from_string(std::string_view name) {
    const auto n = text::to_lower(text::trim(name));
    if (n == "single") {
        return Aggregation::single;
    }
    if (n == "majority" || n == "majority_vote") {
        return Aggregation::majority_vote;
    }
    throw ConfigurationError("unknown aggregation '" + std::string(name) + "'");
}

std::string to_string(RecordRole r) {
    switch (r) {
    case RecordRole::single:
        return "single";
    case RecordRole::constituent:
        return "constituent";
    case RecordRole::aggregate:
        return "aggregate";
    }
    return "single";
}

namespace {

RecordRole role_from_string(const std::string &s, std::size_t line) {
    if (s == "single") {
        return RecordRole::single;
    }
    if (s == "constituent") {
        return RecordRole::constituent;
    }
    if (s == "aggregate") {
        return RecordRole::aggregate;
    }
    throw ParseError("unknown record role '" + s + "'", line);
}

json value_to_json(const AnswerValue &v) {
    if (v.is_categorical()) {
        return {{"kind", "categorical"}, {"label", v.label()}};
    }
    if (v.is_numeric()) {
        return {{"kind", "numeric"}, {"value", v.number()}};
    }
    return {{"kind", "missing"}, {"reason", corpus::to_string(v.reason())}};
}

AnswerValue value_from_json(const json &j, std::size_t line) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "categorical") {
        return AnswerValue::categorical(j.at("label").get<std::string>());
    }
    if (kind == "numeric") {
        return AnswerValue::numeric(j.at("value").get<double>());
    }
    if (kind == "missing") {
        const auto reason = corpus::missing_reason_from_string(j.at("reason").get<std::string>());
        if (!reason) {
            throw ParseError("unknown missing reason", line);
        }
        return AnswerValue::missing(*reason);
    }
    throw ParseError("unknown answer kind '" + kind + "'", line);
}

} // namespace

AnswerValue majority_vote(const std::vector<AnswerValue> &values, const corpus::SurveyItem &item) {
    if (item.is_numeric()) {
        std::vector<double> xs;
        for (const auto &v : values) {
            if (v.is_numeric()) {
                xs.push_back(v.number());
            }
        }
        if (xs.empty()) {
            return AnswerValue::missing(corpus::MissingReason::unparseable);
        }
        std::sort(xs.begin(), xs.end());
        const auto mid = xs.size() / 2;
        return AnswerValue::numeric(xs.size() % 2 ? xs[mid] : (xs[mid - 1] + xs[mid]) / 2.0);
    }
    std::vector<std::pair<AnswerValue, std::size_t>> counts;
    for (const auto &v : values) {
        auto it = std::find_if(counts.begin(), counts.end(), [&](const auto &c) { return c.first == v; });
        if (it == counts.end()) {
            counts.emplace_back(v, 1);
        } else {
            ++it->second;
        }
    }
    if (counts.empty()) {
        return AnswerValue::missing(corpus::MissingReason::unparseable);
    }
    const auto best = std::max_element(counts.begin(), counts.end(),
                                       [](const auto &a, const auto &b) { return a.second < b.second; });
    return best->first;
}

BatchResult run_batch(const std::vector<ElicitationTask> &tasks, Backend &backend, const corpus::SurveyCorpus &corpus,
                      const BatchOptions &options) {
    if (options.runs == 0) {
        throw ConfigurationError("runs must be >= 1");
    }
    std::unordered_set<std::string> known;
    for (const auto &r : corpus.respondents) {
        known.insert(r.respondent_id);
    }
    for (const auto &task : tasks) {
        if (!known.contains(task.respondent_id())) {
            throw IntegrityError("work list references unknown respondent '" + task.respondent_id() + "'");
        }
        if (options.aggregation == Aggregation::majority_vote && options.runs % 2 == 0 &&
            task.target.item.is_categorical()) {
            throw ConfigurationError("majority voting on categorical item '" + task.item_code() +
                                     "' needs an odd number of runs");
        }
    }

    const bool vote = options.aggregation == Aggregation::majority_vote;
    const std::size_t per_task = options.runs + (vote ? 1 : 0);
    std::vector<PredictionRecord> slots(tasks.size() * per_task);
    std::vector<char> done(tasks.size(), 0);
    std::atomic<std::size_t> failures{0};
    std::atomic<bool> aborted{false};
    BatchDiagnostics diag;
    diag.tasks = tasks.size();

    std::atomic<std::size_t> elicitations{0}, unparseable{0}, clipped{0};

    parallel_for(tasks.size(), options.workers, [&](std::size_t t) {
        if (aborted) {
            return;
        }
        const auto &task = tasks[t];
        std::vector<AnswerValue> parsed;
        bool task_failed = false;
        for (std::size_t run = 0; run < options.runs; ++run) {
            PredictionRecord rec{task.respondent_id(),
                                 task.item_code(),
                                 agents::to_string(task.profile.condition),
                                 run,
                                 {},
                                 AnswerValue::missing(corpus::MissingReason::unparseable),
                                 std::nullopt,
                                 vote ? RecordRole::constituent : RecordRole::single,
                                 false};
            const auto start = std::chrono::steady_clock::now();
            try {
                rec.raw_text = backend.complete(task, run);
                if (!backend.deterministic()) {
                    rec.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                         std::chrono::steady_clock::now() - start)
                                         .count();
                }
                auto outcome = parse_answer(rec.raw_text, task.target.item, task.target.mode, options.markers);
                rec.parsed = std::move(outcome.value);
                rec.clipped = outcome.clipped;
                if (rec.clipped) {
                    ++clipped;
                }
                if (rec.parsed.is_missing() && rec.parsed.reason() == corpus::MissingReason::unparseable) {
                    ++unparseable;
                }
            } catch (const TransportError &) {
                task_failed = true;
            }
            ++elicitations;
            parsed.push_back(rec.parsed);
            slots[t * per_task + run] = std::move(rec);
        }
        if (vote) {
            PredictionRecord agg{task.respondent_id(),
                                 task.item_code(),
                                 agents::to_string(task.profile.condition),
                                 options.runs,
                                 "",
                                 majority_vote(parsed, task.target.item),
                                 std::nullopt,
                                 RecordRole::aggregate,
                                 false};
            slots[t * per_task + options.runs] = std::move(agg);
        }
        done[t] = 1;
        if (task_failed && ++failures >= options.max_failures) {
            aborted = true;
        }
    });

    diag.elicitations = elicitations;
    diag.transport_failures = failures;
    diag.unparseable = unparseable;
    diag.clipped = clipped;

    BatchResult result;
    result.diagnostics = diag;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (!done[t]) {
            continue;
        }
        for (std::size_t k = 0; k < per_task; ++k) {
            result.records.push_back(std::move(slots[t * per_task + k]));
        }
    }
    if (aborted) {
        if (options.on_abort) {
            options.on_abort(result.records);
        }
        throw BackendUnavailableError("stopped after " + std::to_string(diag.transport_failures) +
                                      " tasks exhausted their retries");
    }
    return result;
}

void write_prediction_log(std::ostream &out, const std::vector<PredictionRecord> &records) {
    for (const auto &r : records) {
        json j = {{"respondent_id", r.respondent_id},
                  {"item_code", r.item_code},
                  {"condition", r.condition},
                  {"run_index", r.run_index},
                  {"role", to_string(r.role)},
                  {"raw_text", r.raw_text},
                  {"parsed", value_to_json(r.parsed)},
                  {"clipped", r.clipped}};
        if (r.latency_ms) {
            j["latency_ms"] = *r.latency_ms;
        }
        out << j.dump() << '\n';
    }
}

std::vector<PredictionRecord> read_prediction_log(std::istream &in) {
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::trim(line).empty()) {
            continue;
        }
        try {
            const auto j = json::parse(line);
            PredictionRecord r;
            r.respondent_id = j.at("respondent_id").get<std::string>();
            r.item_code = j.at("item_code").get<std::string>();
            r.condition = j.at("condition").get<std::string>();
            r.run_index = j.at("run_index").get<std::size_t>();
            r.role = role_from_string(j.at("role").get<std::string>(), number);
            r.raw_text = j.at("raw_text").get<std::string>();
            r.parsed = value_from_json(j.at("parsed"), number);
            r.clipped = j.value("clipped", false);
            if (j.contains("latency_ms")) {
                r.latency_ms = j["latency_ms"].get<long long>();
            }
            out.push_back(std::move(r));
        } catch (const json::exception &e) {
            throw ParseError(std::string("bad prediction record: ") + e.what(), number);
        }
    }
    return out;
}

void sort_records(std::vector<PredictionRecord> &records) {
    std::stable_sort(records.begin(), records.end(), [](const PredictionRecord &a, const PredictionRecord &b) {
        return std::tie(a.respondent_id, a.item_code, a.condition, a.run_index) <
               std::tie(b.respondent_id, b.item_code, b.condition, b.run_index);
    });
}

ReplayBackend::ReplayBackend(const std::vector<PredictionRecord> &records) {
    for (const auto &r : records) {
        if (r.role != RecordRole::aggregate) {
            raw_[{r.respondent_id, r.item_code, r.condition, r.run_index}] = r.raw_text;
        }
    }
}

std::string ReplayBackend::complete(const ElicitationTask &task, std::size_t run_index) {
    const auto key = std::make_tuple(task.respondent_id(), task.item_code(), agents::to_string(task.profile.condition),
                                     run_index);
    const auto it = raw_.find(key);
    if (it == raw_.end()) {
        throw IntegrityError("prediction log has no run " + std::to_string(run_index) + " for " +
                             task.respondent_id() + "/" + task.item_code() + "/" +
                             agents::to_string(task.profile.condition));
    }
    return it->second;
}

} // namespace surveysim::llm
