#pragma once

#include "surveysim/common/errors.hpp"

#include <string>

namespace surveysim::llm {

/// Sampling settings sent with every request. Defaults are Ollama's stock values
/// for the reference model.
struct GenerationConfig {
    double temperature = 0.6;
    int top_k = 20;
    double top_p = 0.95;
    double repeat_penalty = 1.0;
    bool thinking_enabled = true;
    int context_window = 8000;
    std::string model_name = "qwen3:14b";

    void validate() const {
        if (!(temperature >= 0.0)) {
            throw ConfigurationError("temperature must be >= 0");
        }
        if (!(top_p > 0.0 && top_p <= 1.0)) {
            throw ConfigurationError("top_p must lie in (0, 1]");
        }
        if (context_window <= 0) {
            throw ConfigurationError("context_window must be positive");
        }
        if (top_k < 0) {
            throw ConfigurationError("top_k must be >= 0");
        }
    }

    bool operator==(const GenerationConfig &) const = default;
};

} // namespace surveysim::llm
