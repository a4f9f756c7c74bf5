#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "marg/tokens.hpp"

namespace marg {

enum class Role { system, user, assistant };

const char* to_string(Role role);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct SamplingParams {
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

struct CompletionRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;  // non-empty, first message is system
    SamplingParams sampling;
};

// Identifies which method/paper/agent a request belongs to, for usage
// accounting and scripted matching.
struct CallContext {
    std::string method_label;
    std::string paper_id;
    std::string agent_label;
};

// Sum of the token counts of all message contents in the request.
int request_tokens(const CompletionRequest& request);

struct UsageEntry {
    std::string method_label;
    std::string paper_id;
    int input_tokens = 0;
    int generated_tokens = 0;
};

struct UsageRow {
    std::string method_label;
    long long input_tokens = 0;
    long long generated_tokens = 0;
    int n_requests = 0;
    int n_papers = 0;              // distinct tagged paper ids
    double avg_input_per_paper = 0.0;
    double avg_generated_per_paper = 0.0;
};

// Serialized append log of completed requests. One entry per successful
// completion; failed requests record nothing.
class UsageLedger {
public:
    void record(const CallContext& ctx, int input_tokens, int generated_tokens);
    std::vector<UsageEntry> entries() const;
    void append(const UsageEntry& entry);
    size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<UsageEntry> entries_;
};

// Per-method totals plus per-paper averages over the tagged paper ids.
// Rows are ordered by method label.
std::vector<UsageRow> usage_report(const std::vector<UsageEntry>& entries);

// Abstract chat-completion backend. Implementations must be safe to call
// from multiple threads and must record exactly one ledger entry per
// successful completion.
class Backend {
public:
    virtual ~Backend() = default;

    // Returns the assistant reply. Throws TokenLimitError when the request
    // exceeds the input token limit, TransportError on network failure after
    // bounded retries, BackendRefusal on a non-retryable API error.
    virtual ChatMessage complete(const CompletionRequest& request, const CallContext& ctx) = 0;

    virtual UsageLedger& ledger() = 0;
    const UsageLedger& ledger() const { return const_cast<Backend*>(this)->ledger(); }
};

// Throws std::invalid_argument unless messages are non-empty and start with
// a system message; throws TokenLimitError when the request exceeds `limit`.
void validate_request(const CompletionRequest& request, int limit);

constexpr int kDefaultInputTokenLimit = 8192;

}  // namespace marg
