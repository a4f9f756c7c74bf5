#include "marg/http_backend.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "marg/errors.hpp"

namespace marg {

namespace {
using nlohmann::json;

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

std::string build_body(const CompletionRequest& request) {
    json body;
    body["model"] = request.model_id;
    body["temperature"] = request.sampling.temperature;
    body["max_tokens"] = request.sampling.max_output_tokens;
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    body["messages"] = std::move(messages);
    return body.dump();
}
}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {}

ChatMessage HttpBackend::complete(const CompletionRequest& request, const CallContext& ctx) {
    validate_request(request, config_.input_token_limit);

    const std::string body = build_body(request);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto delay =
                std::chrono::milliseconds(config_.retry_base_delay_ms << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        client.set_write_timeout(config_.timeout_seconds);

        auto res = client.Post(config_.path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            json doc = json::parse(res->body, nullptr, false);
            if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty() ||
                !doc["choices"][0].contains("message")) {
                throw BackendRefusal("malformed completion response: " +
                                     res->body.substr(0, 200));
            }
            const std::string content =
                doc["choices"][0]["message"].value("content", std::string());
            int in_tokens = request_tokens(request);
            int out_tokens = count_tokens(content);
            if (doc.contains("usage") && doc["usage"].is_object()) {
                in_tokens = doc["usage"].value("prompt_tokens", in_tokens);
                out_tokens = doc["usage"].value("completion_tokens", out_tokens);
            }
            ledger_.record(ctx, in_tokens, out_tokens);
            return ChatMessage{Role::assistant, content};
        }
        if (retryable_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        throw BackendRefusal("HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 500));
    }
    throw TransportError("request failed after " + std::to_string(config_.max_retries + 1) +
                         " attempts (" + last_error + ")");
}

}  // namespace marg
