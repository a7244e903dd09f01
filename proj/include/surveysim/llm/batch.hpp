#pragma once

#include "surveysim/corpus/types.hpp"
#include "surveysim/llm/backend.hpp"
#include "surveysim/llm/parse.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace surveysim::llm {

enum class Aggregation { single, majority_vote };

std::string to_string(Aggregation a);
Aggregation aggregation_from_string(std::string_view name);

/// single: one record per run. constituent: a run feeding a majority vote.
/// aggregate: the vote itself (run_index = number of runs).
enum class RecordRole { single, constituent, aggregate };

std::string to_string(RecordRole r);

struct PredictionRecord {
    std::string respondent_id;
    std::string item_code;
    std::string condition;
    std::size_t run_index = 0;
    std::string raw_text;
    corpus::AnswerValue parsed;
    std::optional<long long> latency_ms;
    RecordRole role = RecordRole::single;
    bool clipped = false;

    /// Records feeding evaluation: singles and aggregates.
    bool is_final() const noexcept { return role != RecordRole::constituent; }

    bool operator==(const PredictionRecord &) const = default;
};

struct BatchOptions {
    std::size_t runs = 1;
    Aggregation aggregation = Aggregation::single;
    std::size_t workers = 0; ///< 0 = hardware concurrency
    /// Stop with BackendUnavailableError once this many tasks exhausted their retries.
    std::size_t max_failures = 25;
    ThinkMarkers markers;
    /// Receives the records completed so far before BackendUnavailableError is thrown.
    std::function<void(const std::vector<PredictionRecord> &)> on_abort;
};

struct BatchDiagnostics {
    std::size_t tasks = 0;
    std::size_t elicitations = 0;
    std::size_t transport_failures = 0;
    std::size_t unparseable = 0;
    std::size_t clipped = 0;

    bool operator==(const BatchDiagnostics &) const = default;
};

struct BatchResult {
    std::vector<PredictionRecord> records; ///< task order, then run order, aggregate last
    BatchDiagnostics diagnostics;
};

/// Runs every task `runs` times on a bounded worker pool. Results are independent of
/// scheduling. Throws IntegrityError when a task names a respondent absent from
/// `corpus`, ConfigurationError for runs == 0 or an even run count with majority
/// voting on a categorical item.
BatchResult run_batch(const std::vector<ElicitationTask> &tasks, Backend &backend, const corpus::SurveyCorpus &corpus,
                      const BatchOptions &options = {});

/// Mode of categorical values (ties: first in `values` order) or median of numeric
/// values; Missing values are ignored for numeric items. All missing -> Missing(unparseable).
corpus::AnswerValue majority_vote(const std::vector<corpus::AnswerValue> &values, const corpus::SurveyItem &item);

/// One JSON object per line.
void write_prediction_log(std::ostream &out, const std::vector<PredictionRecord> &records);
/// Throws ParseError with the line number on malformed lines.
std::vector<PredictionRecord> read_prediction_log(std::istream &in);

/// Sort key used for diff-stable logs: (respondent, item, condition, run).
void sort_records(std::vector<PredictionRecord> &records);

/// Serves raw text recorded in a prediction log; throws IntegrityError when a
/// (respondent, item, condition, run) is not in the log.
class ReplayBackend : public Backend {
  public:
    explicit ReplayBackend(const std::vector<PredictionRecord> &records);

    std::string complete(const ElicitationTask &task, std::size_t run_index) override;
    bool deterministic() const override { return true; }

  private:
    std::map<std::tuple<std::string, std::string, std::string, std::size_t>, std::string> raw_;
};

} // namespace surveysim::llm
