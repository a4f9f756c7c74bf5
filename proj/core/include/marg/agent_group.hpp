#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "marg/backend.hpp"
#include "marg/corpus.hpp"
#include "marg/prompts.hpp"
#include "marg/transcript.hpp"

namespace marg {

enum class RoleKind { leader, worker, expert };

struct AgentRole {
    RoleKind kind = RoleKind::worker;
    std::string id_label;  // "Agent 0" is always the leader
};

// Classification of prunable history entries. Pinned messages (system
// prompt, chunk/role prompt, "Ready" handshake, task prompt) live outside
// the history and are never pruned.
enum class EntryKind {
    leader_output,  // leader-authored, never pruned
    received,       // message delivered from another agent (round-tagged)
    own_reply,      // a non-leader's reply
    correction,     // injected correction, kept for the leader
};

struct HistoryEntry {
    ChatMessage message;
    EntryKind kind = EntryKind::received;
    int round = 0;
};

struct Agent {
    AgentRole role;
    std::vector<ChatMessage> pinned;
    std::vector<HistoryEntry> history;

    // Full conversation (pinned + history) as request messages.
    std::vector<ChatMessage> messages() const;
};

struct GroupLimits {
    int max_leader_turns = 40;
    int worker_tail_limit = 3;
    int input_token_limit = kDefaultInputTokenLimit;
};

// Protocol texts resolved from a prompt bundle.
struct ProtocolTexts {
    std::string reminder;
    std::string duplicate_interjection;
    std::string no_response_followup;  // {agent_name}
    std::string final_answer_elicitation;
    std::vector<std::string> no_response_markers;

    static ProtocolTexts from_bundle(const PromptBundle& bundle);
};

struct GroupConfig {
    std::vector<PaperChunk> chunks;           // one worker per chunk
    std::string leader_system_prompt;
    std::string worker_system_prompt;
    std::string worker_chunk_template;        // {paper_chunk},{num_agents},{agent_name},{other_agent_names}
    std::string agent_info_template;          // expert handshake
    std::optional<std::string> expert_prompt;
    std::string leader_task_prompt;
    ProtocolTexts protocol;
    GroupLimits limits;
    std::string group_label;
    std::string model_id = "gpt-4-0613";
    SamplingParams sampling;
    int concurrency = 1;  // parallel non-leader generations per round
};

// Leader output parse result.
struct Outgoing {
    enum class Kind { send, terminal } kind = Kind::terminal;
    std::string body;
    bool misplaced_marker = false;  // recovered via the full-message marker
};

// One non-leader's reply within a broadcast round.
struct RoundReply {
    size_t agent_index = 0;
    std::string text;
    bool no_response = false;
    bool regenerated = false;
};

struct RoundBatch {
    std::vector<RoundReply> replies;
};

struct RunResult {
    std::string final_answer;
    GroupTranscript transcript;
    bool aborted = false;
    std::string abort_reason;
    int rounds = 0;  // delivered broadcast rounds
};

// Extracts the broadcast body from a leader output. The send marker wins
// over the full-message marker; a body that trims to nothing is terminal.
Outgoing parse_outgoing(const std::string& leader_output);

// Collapses whitespace runs to single spaces and trims; case is preserved.
std::string normalize_message(const std::string& text);

// The protocol engine: one leader, one worker per chunk, optionally one
// expert. Drives broadcast rounds of the send-message protocol with error
// correction and per-role history pruning.
class AgentGroup {
public:
    AgentGroup(GroupConfig config, Backend& backend, CallContext ctx);

    // Builds the agents, fills their prompts, and records each non-leader's
    // "Ready" acknowledgment as pinned. Throws PromptTemplateError on an
    // unresolved placeholder.
    void init();

    // Runs the protocol loop until the leader stops sending (or the turn cap
    // forces elicitation), then elicits and returns the final answer. A
    // TokenLimitError aborts the run; the partial transcript is preserved
    // and the result is flagged.
    RunResult run_task(const std::string& task_prompt);

    // True (and an interjection appended) iff the normalized body equals a
    // previously sent one. Exposed for tests; run_task applies it per send.
    bool detect_duplicate(const std::string& body);

    // Delivers `body` to all non-leaders, collects replies, applies
    // no-response follow-ups for agents named in the body, then appends the
    // non-tagged replies and a protocol reminder to the leader.
    RoundBatch broadcast_round(const std::string& body);

    // Injects a follow-up to each agent whose label occurs in `body` and
    // whose reply matched a no-response marker, regenerating its reply once.
    // Returns the number of follow-ups.
    int no_response_followup(const std::string& body, RoundBatch& batch);

    // Applies the per-role pruning policy: worker tails cut to the limit,
    // leader keeps its own outputs, corrections, and only the latest
    // received batch; experts untouched.
    void prune();

    const std::vector<Agent>& agents() const { return agents_; }
    const Agent& leader() const { return agents_.front(); }
    const GroupTranscript& transcript() const { return transcript_; }
    const GroupConfig& config() const { return config_; }
    bool initialized() const { return initialized_; }

    // Test hook, called after each delivered round (post-prune).
    std::function<void(const AgentGroup&, int round)> after_round;

private:
    std::string generate(Agent& agent);
    bool is_no_response(const std::string& reply) const;
    void deliver_to_agent(Agent& agent, const std::string& sender_label,
                          const std::string& body);

    GroupConfig config_;
    Backend& backend_;
    CallContext ctx_;
    std::vector<Agent> agents_;
    GroupTranscript transcript_;
    std::vector<std::string> sent_bodies_;  // normalized
    int round_ = 0;
    int turn_ = 0;
    bool initialized_ = false;
};

}  // namespace marg
