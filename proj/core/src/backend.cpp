#include "marg/backend.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "marg/errors.hpp"

namespace marg {

const char* to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw std::invalid_argument("unknown chat role: " + s);
}

int request_tokens(const CompletionRequest& request) {
    int total = 0;
    for (const auto& m : request.messages) total += count_tokens(m.content);
    return total;
}

void UsageLedger::record(const CallContext& ctx, int input_tokens, int generated_tokens) {
    std::lock_guard lock(mutex_);
    entries_.push_back({ctx.method_label, ctx.paper_id, input_tokens, generated_tokens});
}

void UsageLedger::append(const UsageEntry& entry) {
    std::lock_guard lock(mutex_);
    entries_.push_back(entry);
}

std::vector<UsageEntry> UsageLedger::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

size_t UsageLedger::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::vector<UsageRow> usage_report(const std::vector<UsageEntry>& entries) {
    std::map<std::string, UsageRow> by_method;
    std::map<std::string, std::set<std::string>> papers;
    for (const auto& e : entries) {
        UsageRow& row = by_method[e.method_label];
        row.method_label = e.method_label;
        row.input_tokens += e.input_tokens;
        row.generated_tokens += e.generated_tokens;
        row.n_requests += 1;
        if (!e.paper_id.empty()) papers[e.method_label].insert(e.paper_id);
    }
    std::vector<UsageRow> rows;
    rows.reserve(by_method.size());
    for (auto& [label, row] : by_method) {
        row.n_papers = static_cast<int>(papers[label].size());
        if (row.n_papers > 0) {
            row.avg_input_per_paper = static_cast<double>(row.input_tokens) / row.n_papers;
            row.avg_generated_per_paper =
                static_cast<double>(row.generated_tokens) / row.n_papers;
        }
        rows.push_back(row);
    }
    return rows;
}

void validate_request(const CompletionRequest& request, int limit) {
    if (request.messages.empty())
        throw std::invalid_argument("completion request has no messages");
    if (request.messages.front().role != Role::system)
        throw std::invalid_argument("first message must have role system");
    const int total = request_tokens(request);
    if (total > limit) {
        throw TokenLimitError("request of " + std::to_string(total) +
                              " tokens exceeds input limit of " + std::to_string(limit));
    }
}

}  // namespace marg
