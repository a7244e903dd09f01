#pragma once

#include "surveysim/agents/agents.hpp"
#include "surveysim/llm/generation_config.hpp"
#include "surveysim/llm/mock.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace surveysim::llm {

/// One elicitation: who is asked, what, and the prompt that carries it.
struct ElicitationTask {
    agents::AgentProfile profile;
    agents::TargetQuestion target;
    agents::PromptBundle bundle;
    /// Only mock backends read it.
    corpus::AnswerValue truth;

    const std::string &respondent_id() const { return profile.respondent_id; }
    const std::string &item_code() const { return target.item.code; }
};

class Backend {
  public:
    virtual ~Backend() = default;
    /// Raw model text for one run of one task. Throws TransportError when the
    /// service cannot be reached after the backend's own retries.
    virtual std::string complete(const ElicitationTask &task, std::size_t run_index) = 0;
    /// True when outputs depend only on the task, run index and seed.
    virtual bool deterministic() const { return false; }
};

enum class ApiStyle { ollama_chat, openai_chat };

struct Endpoint {
    std::string base_url = "http://127.0.0.1:11434";
    std::string path = "/api/chat";
    ApiStyle api = ApiStyle::ollama_chat;
    std::string auth_header; ///< e.g. "Authorization"; empty = none
    std::string auth_value;
    int timeout_ms = 120000;
    int max_attempts = 3;
    int backoff_ms = 250; ///< doubled after each failed attempt
};

/// Request body for the configured API style.
nlohmann::json request_body(const agents::PromptBundle &bundle, const GenerationConfig &config, ApiStyle api);

/// Message content from an Ollama (`message.content`) or OpenAI (`choices[0].message.content`)
/// response. Ollama's separate `message.thinking` field is re-wrapped in think markers.
/// Throws TransportError when neither shape is present.
std::string response_text(const nlohmann::json &response);

/// Called with (request body, response body or error text) for every attempt.
using AuditSink = std::function<void(const std::string &, const std::string &)>;

/// HTTP client for a local completion service. Safe for concurrent use: each call
/// opens its own connection.
class HttpBackend : public Backend {
  public:
    explicit HttpBackend(Endpoint endpoint, AuditSink audit = {});

    std::string complete(const agents::PromptBundle &bundle);
    std::string complete(const ElicitationTask &task, std::size_t run_index) override;

  private:
    Endpoint endpoint_;
    AuditSink audit_;
};

/// Policies looked up by "<condition>:<item>", then "<item>", then "<condition>:*", then "*".
using PolicyTable = std::map<std::string, MockPolicy>;

const MockPolicy *find_policy(const PolicyTable &table, const std::string &condition, const std::string &item);

/// Per-task seed: base mixed with respondent, item, condition and run.
std::uint64_t task_seed(std::uint64_t base, const ElicitationTask &task, std::size_t run_index);

class MockBackend : public Backend {
  public:
    MockBackend(PolicyTable policies, std::uint64_t seed);

    std::string complete(const ElicitationTask &task, std::size_t run_index) override;
    bool deterministic() const override { return true; }

    /// Throws ConfigurationError if some task has no policy or a mismatched one.
    void check_coverage(const std::vector<ElicitationTask> &tasks) const;

  private:
    PolicyTable policies_;
    std::uint64_t seed_;
};

} // namespace surveysim::llm
