#include "surveysim/llm/backend.hpp"

#include "surveysim/common/errors.hpp"
#include "surveysim/common/random.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <thread>

namespace surveysim::llm {

using nlohmann::json;

json request_body(const agents::PromptBundle &bundle, const GenerationConfig &config, ApiStyle api) {
    const json messages = json::array({{{"role", "system"}, {"content", bundle.system_text}},
                                       {{"role", "user"}, {"content", bundle.user_text}}});
    if (api == ApiStyle::openai_chat) {
        return {{"model", config.model_name},     {"messages", messages},
                {"temperature", config.temperature}, {"top_p", config.top_p},
                {"top_k", config.top_k},             {"repetition_penalty", config.repeat_penalty},
                {"stream", false}};
    }
    return {{"model", config.model_name},
            {"messages", messages},
            {"stream", false},
            {"think", config.thinking_enabled},
            {"options",
             {{"temperature", config.temperature},
              {"top_k", config.top_k},
              {"top_p", config.top_p},
              {"repeat_penalty", config.repeat_penalty},
              {"num_ctx", config.context_window}}}};
}

std::string response_text(const json &response) {
    if (response.contains("message") && response["message"].contains("content")) {
        const auto &m = response["message"];
        std::string out;
        if (m.contains("thinking") && m["thinking"].is_string() && !m["thinking"].get<std::string>().empty()) {
            out = "<think>" + m["thinking"].get<std::string>() + "</think>";
        }
        return out + m["content"].get<std::string>();
    }
    if (response.contains("choices") && response["choices"].is_array() && !response["choices"].empty()) {
        const auto &c = response["choices"][0];
        if (c.contains("message") && c["message"].contains("content")) {
            return c["message"]["content"].get<std::string>();
        }
        if (c.contains("text")) {
            return c["text"].get<std::string>();
        }
    }
    throw TransportError("completion response has no message content");
}

HttpBackend::HttpBackend(Endpoint endpoint, AuditSink audit)
    : endpoint_{std::move(endpoint)}, audit_{std::move(audit)} {
    if (endpoint_.max_attempts < 1) {
        throw ConfigurationError("max_attempts must be >= 1");
    }
}

std::string HttpBackend::complete(const agents::PromptBundle &bundle) {
    bundle.generation.validate();
    const std::string body = request_body(bundle, bundle.generation, endpoint_.api).dump();
    httplib::Headers headers;
    if (!endpoint_.auth_header.empty()) {
        headers.emplace(endpoint_.auth_header, endpoint_.auth_value);
    }

    std::string last_error;
    bool last_was_timeout = false;
    int backoff = endpoint_.backoff_ms;
    for (int attempt = 1; attempt <= endpoint_.max_attempts; ++attempt) {
        httplib::Client client(endpoint_.base_url);
        const auto timeout = std::chrono::milliseconds(endpoint_.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(endpoint_.path, headers, body, "application/json");
        if (res && res->status == 200) {
            if (audit_) {
                audit_(body, res->body);
            }
            try {
                return response_text(json::parse(res->body));
            } catch (const json::exception &e) {
                throw TransportError(std::string("malformed completion response: ") + e.what());
            }
        }
        if (res) {
            last_error = "HTTP " + std::to_string(res->status);
            last_was_timeout = false;
            if (res->status >= 400 && res->status < 500) {
                if (audit_) {
                    audit_(body, last_error + " " + res->body);
                }
                throw TransportError(endpoint_.base_url + endpoint_.path + " rejected the request: " + last_error);
            }
        } else {
            const auto err = res.error();
            last_error = httplib::to_string(err);
            last_was_timeout = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
        }
        if (audit_) {
            audit_(body, last_error);
        }
        if (attempt < endpoint_.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
    }
    const std::string message = endpoint_.base_url + endpoint_.path + " failed after " +
                                std::to_string(endpoint_.max_attempts) + " attempts: " + last_error;
    if (last_was_timeout) {
        throw ElicitationTimeoutError(message);
    }
    throw TransportError(message);
}

std::string HttpBackend::complete(const ElicitationTask &task, std::size_t) { return complete(task.bundle); }

const MockPolicy *find_policy(const PolicyTable &table, const std::string &condition, const std::string &item) {
    for (const auto &key : {condition + ":" + item, item, condition + ":*", std::string("*")}) {
        if (auto it = table.find(key); it != table.end()) {
            return &it->second;
        }
    }
    return nullptr;
}

std::uint64_t task_seed(std::uint64_t base, const ElicitationTask &task, std::size_t run_index) {
    return SeedSequence(base)
        .mix(task.respondent_id())
        .mix(task.item_code())
        .mix(agents::to_string(task.profile.condition))
        .mix(static_cast<std::uint64_t>(run_index))
        .value();
}

MockBackend::MockBackend(PolicyTable policies, std::uint64_t seed) : policies_{std::move(policies)}, seed_{seed} {}

std::string MockBackend::complete(const ElicitationTask &task, std::size_t run_index) {
    const auto condition = agents::to_string(task.profile.condition);
    const auto *policy = find_policy(policies_, condition, task.item_code());
    if (policy == nullptr) {
        throw ConfigurationError("no mock policy for " + condition + ":" + task.item_code());
    }
    return simulate_mock(task.profile, task.target, *policy, task.truth, task_seed(seed_, task, run_index));
}

void MockBackend::check_coverage(const std::vector<ElicitationTask> &tasks) const {
    for (const auto &task : tasks) {
        const auto condition = agents::to_string(task.profile.condition);
        const auto *policy = find_policy(policies_, condition, task.item_code());
        if (policy == nullptr) {
            throw ConfigurationError("no mock policy for " + condition + ":" + task.item_code());
        }
        check_policy(*policy, task.target.item);
    }
}

} // namespace surveysim::llm
