#pragma once

#include <string>

#include "marg/backend.hpp"

namespace marg {

struct HttpBackendConfig {
    std::string base_url = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string api_key;
    int input_token_limit = kDefaultInputTokenLimit;
    int max_retries = 3;            // transport errors only
    int retry_base_delay_ms = 500;  // doubled per retry
    int timeout_seconds = 120;
};

// Chat-completions HTTP client. Sends {model, messages, temperature,
// max_tokens} and reads choices[0].message.content. Server-reported usage is
// preferred for the ledger; local counts are the fallback.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    ChatMessage complete(const CompletionRequest& request, const CallContext& ctx) override;
    UsageLedger& ledger() override { return ledger_; }

private:
    HttpBackendConfig config_;
    UsageLedger ledger_;
};

}  // namespace marg
