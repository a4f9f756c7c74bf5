#pragma once

#include <optional>
#include <string>
#include <vector>

#include "marg/backend.hpp"

namespace marg {

// One scripted reply. Matcher fields are conjunctive; omitted fields match
// anything. `contains` is tested against the content of the last message in
// the request, `history_contains` against every message content. An entry
// with max_uses set stops matching once exhausted; entries are evaluated in
// file order and the first live match wins.
struct ScriptedExchange {
    std::optional<std::string> agent;             // exact agent label
    std::optional<std::string> contains;          // substring of last message
    std::optional<std::string> history_contains;  // substring anywhere in request
    std::string reply;
    std::optional<int> max_uses;
};

struct Script {
    std::vector<ScriptedExchange> exchanges;
    bool strict = false;  // error on unmatched requests instead of replying ""
};

// Parses a script file:
//   {"schema_version": 1, "strict": true,
//    "exchanges": [{"agent": ..., "contains": ..., "history_contains": ...,
//                   "reply": ..., "max_uses": N}]}
Script load_script(const std::string& path);
Script parse_script(const std::string& json_text);

// Deterministic backend that replays a script. Matching is serialized so
// first-match-wins stays deterministic under concurrent callers.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(Script script, int input_token_limit = kDefaultInputTokenLimit);

    ChatMessage complete(const CompletionRequest& request, const CallContext& ctx) override;
    UsageLedger& ledger() override { return ledger_; }

    // Number of requests that found no matching exchange (non-strict mode).
    int unmatched_count() const;

private:
    Script script_;
    std::vector<int> uses_;
    int input_token_limit_;
    int unmatched_ = 0;
    mutable std::mutex mutex_;
    UsageLedger ledger_;
};

}  // namespace marg
