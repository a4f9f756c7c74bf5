#include "marg/scripted_backend.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "marg/errors.hpp"

namespace marg {

namespace {
using nlohmann::json;

std::optional<std::string> opt_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw SchemaError(std::string("script field '") + key + "' must be a string");
    return it->get<std::string>();
}
}  // namespace

Script parse_script(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw SchemaError("script is not valid JSON");
    if (!doc.is_object() || !doc.contains("exchanges") || !doc["exchanges"].is_array())
        throw SchemaError("script must be an object with an 'exchanges' array");

    Script script;
    script.strict = doc.value("strict", false);
    for (const auto& e : doc["exchanges"]) {
        if (!e.is_object() || !e.contains("reply") || !e["reply"].is_string())
            throw SchemaError("each exchange must be an object with a string 'reply'");
        ScriptedExchange ex;
        ex.agent = opt_string(e, "agent");
        ex.contains = opt_string(e, "contains");
        ex.history_contains = opt_string(e, "history_contains");
        ex.reply = e["reply"].get<std::string>();
        if (e.contains("max_uses") && !e["max_uses"].is_null()) {
            if (!e["max_uses"].is_number_integer())
                throw SchemaError("'max_uses' must be an integer");
            ex.max_uses = e["max_uses"].get<int>();
        }
        script.exchanges.push_back(std::move(ex));
    }
    return script;
}

Script load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open script file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_script(buf.str());
}

ScriptedBackend::ScriptedBackend(Script script, int input_token_limit)
    : script_(std::move(script)),
      uses_(script_.exchanges.size(), 0),
      input_token_limit_(input_token_limit) {}

ChatMessage ScriptedBackend::complete(const CompletionRequest& request, const CallContext& ctx) {
    validate_request(request, input_token_limit_);

    std::string reply;
    {
        std::lock_guard lock(mutex_);
        const std::string& last = request.messages.back().content;
        int hit = -1;
        for (size_t i = 0; i < script_.exchanges.size(); ++i) {
            const ScriptedExchange& ex = script_.exchanges[i];
            if (ex.max_uses && uses_[i] >= *ex.max_uses) continue;
            if (ex.agent && *ex.agent != ctx.agent_label) continue;
            if (ex.contains && last.find(*ex.contains) == std::string::npos) continue;
            if (ex.history_contains) {
                bool found = false;
                for (const auto& m : request.messages) {
                    if (m.content.find(*ex.history_contains) != std::string::npos) {
                        found = true;
                        break;
                    }
                }
                if (!found) continue;
            }
            hit = static_cast<int>(i);
            break;
        }
        if (hit < 0) {
            if (script_.strict) {
                throw ScriptMatchError("no scripted exchange matches request from '" +
                                       ctx.agent_label + "' (last message starts: \"" +
                                       last.substr(0, 80) + "\")");
            }
            ++unmatched_;
        } else {
            ++uses_[static_cast<size_t>(hit)];
            reply = script_.exchanges[static_cast<size_t>(hit)].reply;
        }
    }

    ledger_.record(ctx, request_tokens(request), count_tokens(reply));
    return ChatMessage{Role::assistant, reply};
}

int ScriptedBackend::unmatched_count() const {
    std::lock_guard lock(mutex_);
    return unmatched_;
}

}  // namespace marg
