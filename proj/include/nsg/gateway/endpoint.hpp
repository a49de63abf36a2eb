#pragma once

#include <string>

#include "nsg/errors.hpp"

namespace nsg {

enum class ReasoningStrength { none, low, medium, high };

inline const char* to_string(ReasoningStrength r) {
    switch (r) {
        case ReasoningStrength::none: return "none";
        case ReasoningStrength::low: return "low";
        case ReasoningStrength::medium: return "medium";
        case ReasoningStrength::high: return "high";
    }
    return "none";
}

inline ReasoningStrength reasoning_from_string(const std::string& s) {
    if (s == "none") return ReasoningStrength::none;
    if (s == "low") return ReasoningStrength::low;
    if (s == "medium") return ReasoningStrength::medium;
    if (s == "high") return ReasoningStrength::high;
    throw ConfigError("unknown reasoning strength '" + s + "'");
}

// One remote chat-completion endpoint. `credential_env` names the
// environment variable holding the bearer token; the value itself never
// appears in config or run artifacts. `family` feeds the cross-model family
// exclusion and must be set.
struct ModelEndpointConfig {
    std::string model_id;
    std::string family;
    std::string base_url;                      // scheme://host[:port]
    std::string api_path = "/v1/chat/completions";
    std::string credential_env;                // empty: no auth header
    ReasoningStrength reasoning_strength = ReasoningStrength::none;
    double temperature = -1.0;                 // < 0: use the provider default
    int max_output_tokens = 0;                 // 0: provider default
    int max_retries = 4;
    int requests_per_minute = 0;               // 0: unlimited
    int retry_base_ms = 500;
    int timeout_seconds = 300;

    void validate() const {
        if (model_id.empty()) throw ConfigError("endpoint needs a model_id");
        if (family.empty()) {
            throw ConfigError("endpoint '" + model_id + "' needs a family (cross-model "
                              "exclusion depends on it)");
        }
        if (base_url.empty()) throw ConfigError("endpoint '" + model_id + "' needs a base_url");
        if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    }
};

}  // namespace nsg
