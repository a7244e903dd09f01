#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace surveysim {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line (or record) number when known.
class ParseError : public Error {
  public:
    ParseError(const std::string &message, std::size_t line = 0)
        : Error(line == 0 ? message : message + " (line " + std::to_string(line) + ")"),
          line_{line} {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Data violates a corpus invariant (duplicate ids, unknown codes, type mismatches).
class IntegrityError : public Error {
  public:
    using Error::Error;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

class ConfigurationError : public Error {
  public:
    using Error::Error;
};

/// A demographic variant needs an item the respondent did not answer.
class IncompleteProfileError : public Error {
  public:
    IncompleteProfileError(std::string respondent_id, std::string item)
        : Error("respondent '" + respondent_id + "' has no answer for required item '" + item +
                "'"),
          respondent_id_{std::move(respondent_id)}, item_{std::move(item)} {}

    const std::string &item() const noexcept { return item_; }
    const std::string &respondent_id() const noexcept { return respondent_id_; }

  private:
    std::string respondent_id_;
    std::string item_;
};

class StratumShortageError : public Error {
  public:
    StratumShortageError(std::string stratum, std::size_t requested, std::size_t available)
        : Error("stratum '" + stratum + "' needs " + std::to_string(requested) + " respondents but only " +
                std::to_string(available) + " are available"),
          stratum_{std::move(stratum)}, requested_{requested}, available_{available} {}

    const std::string &stratum() const noexcept { return stratum_; }
    std::size_t requested() const noexcept { return requested_; }
    std::size_t available() const noexcept { return available_; }

  private:
    std::string stratum_;
    std::size_t requested_;
    std::size_t available_;
};

class RuleGapError : public Error {
  public:
    using Error::Error;
};

/// Network failure talking to the completion service; safe to retry.
class TransportError : public Error {
  public:
    using Error::Error;
    bool retryable() const noexcept { return true; }
};

class ElicitationTimeoutError : public TransportError {
  public:
    using TransportError::TransportError;
};

/// Too many elicitation tasks failed; the batch was stopped early.
class BackendUnavailableError : public Error {
  public:
    using Error::Error;
};

/// Metric is mathematically undefined for the input (constant series, empty input).
class UndefinedMetricError : public Error {
  public:
    using Error::Error;
};

class GroupingError : public Error {
  public:
    using Error::Error;
};

class CorrelationUndefinedError : public UndefinedMetricError {
  public:
    explicit CorrelationUndefinedError(std::string item)
        : UndefinedMetricError("item '" + item + "' is constant; correlation undefined"),
          item_{std::move(item)} {}

    const std::string &item() const noexcept { return item_; }

  private:
    std::string item_;
};

class CoverageError : public Error {
  public:
    using Error::Error;
};

class CollinearityError : public Error {
  public:
    explicit CollinearityError(std::string column)
        : Error("design matrix is rank deficient at column '" + column + "'"),
          column_{std::move(column)} {}

    const std::string &column() const noexcept { return column_; }

  private:
    std::string column_;
};

class InsufficientDataError : public Error {
  public:
    using Error::Error;
};

class TrainingError : public Error {
  public:
    using Error::Error;
};

class LabelMappingError : public Error {
  public:
    LabelMappingError(const std::string &context, std::vector<std::string> unmatched);

    const std::vector<std::string> &unmatched() const noexcept { return unmatched_; }

  private:
    std::vector<std::string> unmatched_;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace surveysim
