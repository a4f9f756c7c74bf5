#include "marg/agent_group.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <future>
#include <stdexcept>

#include "marg/errors.hpp"

namespace marg {

namespace {

constexpr const char* kSendMarker = "SEND MESSAGE:";
constexpr const char* kFullMarker = "SEND FULL MESSAGE";

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

std::string normalize_message(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool pending = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending = !out.empty();
        } else {
            if (pending) out.push_back(' ');
            pending = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

Outgoing parse_outgoing(const std::string& leader_output) {
    Outgoing out;
    const size_t send_pos = leader_output.find(kSendMarker);
    if (send_pos != std::string::npos) {
        out.body = trim(leader_output.substr(send_pos + std::strlen(kSendMarker)));
        out.kind = out.body.empty() ? Outgoing::Kind::terminal : Outgoing::Kind::send;
        return out;
    }
    const size_t full_pos = leader_output.find(kFullMarker);
    if (full_pos != std::string::npos) {
        out.body = trim(leader_output.substr(0, full_pos));
        out.kind = out.body.empty() ? Outgoing::Kind::terminal : Outgoing::Kind::send;
        out.misplaced_marker = out.kind == Outgoing::Kind::send;
        return out;
    }
    out.kind = Outgoing::Kind::terminal;
    return out;
}

std::vector<ChatMessage> Agent::messages() const {
    std::vector<ChatMessage> out = pinned;
    out.reserve(pinned.size() + history.size());
    for (const auto& h : history) out.push_back(h.message);
    return out;
}

ProtocolTexts ProtocolTexts::from_bundle(const PromptBundle& bundle) {
    ProtocolTexts p;
    p.reminder = bundle.get("protocol.reminder");
    p.duplicate_interjection = bundle.get("protocol.duplicate_interjection");
    p.no_response_followup = bundle.get("protocol.no_response_followup");
    p.final_answer_elicitation = bundle.get("protocol.final_answer_elicitation");
    p.no_response_markers = bundle.no_response_markers();
    return p;
}

AgentGroup::AgentGroup(GroupConfig config, Backend& backend, CallContext ctx)
    : config_(std::move(config)), backend_(backend), ctx_(std::move(ctx)) {
    transcript_.group_label = config_.group_label;
}

std::string AgentGroup::generate(Agent& agent) {
    CompletionRequest request;
    request.model_id = config_.model_id;
    request.messages = agent.messages();
    request.sampling = config_.sampling;
    CallContext ctx = ctx_;
    ctx.agent_label = agent.role.id_label;
    return backend_.complete(request, ctx).content;
}

bool AgentGroup::is_no_response(const std::string& reply) const {
    const std::string norm = normalize_message(reply);
    for (const auto& marker : config_.protocol.no_response_markers) {
        const std::string m = normalize_message(marker);
        if (!m.empty() && norm.rfind(m, 0) == 0) return true;
    }
    return false;
}

void AgentGroup::deliver_to_agent(Agent& agent, const std::string& sender_label,
                                  const std::string& body) {
    HistoryEntry entry;
    entry.message = {Role::system, "Message from " + sender_label + ":\n" + body};
    entry.kind = EntryKind::received;
    entry.round = round_;
    agent.history.push_back(std::move(entry));
}

void AgentGroup::init() {
    const size_t n_workers = config_.chunks.size();
    const bool has_expert = config_.expert_prompt.has_value();
    const size_t n_agents = 1 + n_workers + (has_expert ? 1 : 0);

    agents_.clear();
    agents_.reserve(n_agents);

    Agent leader;
    leader.role = {RoleKind::leader, "Agent 0"};
    leader.pinned.push_back({Role::system, config_.leader_system_prompt});
    agents_.push_back(std::move(leader));
    for (size_t i = 0; i < n_workers; ++i) {
        Agent w;
        w.role = {RoleKind::worker, "Agent " + std::to_string(i + 1)};
        agents_.push_back(std::move(w));
    }
    if (has_expert) {
        Agent e;
        e.role = {RoleKind::expert, "Agent " + std::to_string(n_workers + 1)};
        agents_.push_back(std::move(e));
    }

    auto other_names = [&](size_t self) {
        std::string out;
        for (size_t i = 0; i < agents_.size(); ++i) {
            if (i == self) continue;
            if (!out.empty()) out += ", ";
            out += agents_[i].role.id_label;
            switch (agents_[i].role.kind) {
                case RoleKind::leader: out += " (leader)"; break;
                case RoleKind::expert: out += " (expert)"; break;
                case RoleKind::worker: break;
            }
        }
        return out;
    };

    for (size_t i = 1; i < agents_.size(); ++i) {
        Agent& agent = agents_[i];
        std::map<std::string, std::string> vars = {
            {"num_agents", std::to_string(agents_.size())},
            {"agent_name", agent.role.id_label},
            {"other_agent_names", other_names(i)},
        };
        if (agent.role.kind == RoleKind::worker) {
            vars["paper_chunk"] = config_.chunks[i - 1].text;
            agent.pinned.push_back({Role::system, config_.worker_system_prompt});
            agent.pinned.push_back(
                {Role::user,
                 fill_template(config_.worker_chunk_template, vars,
                               {"paper_chunk", "num_agents", "agent_name",
                                "other_agent_names"})});
        } else {
            agent.pinned.push_back({Role::system, *config_.expert_prompt});
            agent.pinned.push_back(
                {Role::user, fill_template(config_.agent_info_template, vars,
                                           {"num_agents", "agent_name"})});
        }
        // The "Ready" acknowledgment is part of the fixed preamble.
        agent.pinned.push_back({Role::assistant, generate(agent)});
    }
    initialized_ = true;
}

bool AgentGroup::detect_duplicate(const std::string& body) {
    const std::string norm = normalize_message(body);
    if (std::find(sent_bodies_.begin(), sent_bodies_.end(), norm) == sent_bodies_.end()) {
        return false;
    }
    Agent& leader = agents_.front();
    HistoryEntry entry;
    entry.message = {Role::user, config_.protocol.duplicate_interjection};
    entry.kind = EntryKind::correction;
    entry.round = round_;
    leader.history.push_back(std::move(entry));

    TranscriptEvent ev;
    ev.turn = turn_;
    ev.sender = "system";
    ev.receiver = "leader";
    ev.content = config_.protocol.duplicate_interjection;
    ev.tags = {EventTag::duplicate_interjection};
    transcript_.events.push_back(std::move(ev));
    return true;
}

int AgentGroup::no_response_followup(const std::string& body, RoundBatch& batch) {
    int followups = 0;
    for (auto& reply : batch.replies) {
        Agent& agent = agents_[reply.agent_index];
        if (!reply.no_response) continue;
        if (body.find(agent.role.id_label) == std::string::npos) continue;

        const std::string note = fill_template(config_.protocol.no_response_followup,
                                               {{"agent_name", agent.role.id_label}});
        HistoryEntry entry;
        entry.message = {Role::user, note};
        entry.kind = EntryKind::correction;
        entry.round = round_;
        agent.history.push_back(std::move(entry));

        TranscriptEvent ev;
        ev.turn = turn_;
        ev.sender = "system";
        ev.receiver = agent.role.id_label;
        ev.content = note;
        ev.tags = {EventTag::no_response_followup};
        transcript_.events.push_back(std::move(ev));

        const std::string regenerated = generate(agent);
        agent.history.push_back({{Role::assistant, regenerated}, EntryKind::own_reply, round_});

        reply.text = regenerated;
        reply.no_response = is_no_response(regenerated);
        reply.regenerated = true;

        TranscriptEvent rev;
        rev.turn = turn_;
        rev.sender = agent.role.id_label;
        rev.receiver = "leader";
        rev.content = regenerated;
        if (reply.no_response) rev.tags.push_back(EventTag::no_response);
        transcript_.events.push_back(std::move(rev));
        ++followups;
    }
    return followups;
}

RoundBatch AgentGroup::broadcast_round(const std::string& body) {
    ++round_;
    sent_bodies_.push_back(normalize_message(body));

    for (size_t i = 1; i < agents_.size(); ++i) {
        deliver_to_agent(agents_[i], "Agent 0", body);
    }

    const size_t n = agents_.size();
    std::vector<std::string> texts(n);
    if (config_.concurrency <= 1) {
        for (size_t i = 1; i < n; ++i) texts[i] = generate(agents_[i]);
    } else {
        size_t i = 1;
        while (i < n) {
            const size_t end = std::min(n, i + static_cast<size_t>(config_.concurrency));
            std::vector<std::future<std::string>> futures;
            for (size_t k = i; k < end; ++k) {
                futures.push_back(std::async(std::launch::async,
                                             [this, k] { return generate(agents_[k]); }));
            }
            std::exception_ptr first_error;
            for (auto& f : futures) {
                try {
                    texts[i] = f.get();
                } catch (...) {
                    if (!first_error) first_error = std::current_exception();
                }
                ++i;
            }
            if (first_error) std::rethrow_exception(first_error);
        }
    }

    RoundBatch batch;
    for (size_t i = 1; i < n; ++i) {
        Agent& agent = agents_[i];
        agent.history.push_back({{Role::assistant, texts[i]}, EntryKind::own_reply, round_});
        RoundReply reply;
        reply.agent_index = i;
        reply.text = texts[i];
        reply.no_response = is_no_response(texts[i]);
        batch.replies.push_back(reply);

        TranscriptEvent ev;
        ev.turn = turn_;
        ev.sender = agent.role.id_label;
        ev.receiver = "leader";
        ev.content = texts[i];
        if (reply.no_response) ev.tags.push_back(EventTag::no_response);
        transcript_.events.push_back(std::move(ev));
    }

    no_response_followup(body, batch);

    // Non-tagged replies reach the leader in agent order, then the reminder.
    Agent& leader = agents_.front();
    for (const auto& reply : batch.replies) {
        if (reply.no_response) continue;
        deliver_to_agent(leader, agents_[reply.agent_index].role.id_label, reply.text);
    }
    leader.history.push_back(
        {{Role::system, config_.protocol.reminder}, EntryKind::received, round_});
    TranscriptEvent rem;
    rem.turn = turn_;
    rem.sender = "system";
    rem.receiver = "leader";
    rem.content = config_.protocol.reminder;
    rem.tags = {EventTag::protocol_reminder};
    transcript_.events.push_back(std::move(rem));

    return batch;
}

void AgentGroup::prune() {
    for (auto& agent : agents_) {
        switch (agent.role.kind) {
            case RoleKind::worker: {
                const size_t limit = static_cast<size_t>(config_.limits.worker_tail_limit);
                if (agent.history.size() > limit) {
                    agent.history.erase(agent.history.begin(),
                                        agent.history.end() - static_cast<long>(limit));
                }
                break;
            }
            case RoleKind::leader: {
                std::vector<HistoryEntry> kept;
                kept.reserve(agent.history.size());
                for (auto& e : agent.history) {
                    if (e.kind != EntryKind::received || e.round == round_) {
                        kept.push_back(std::move(e));
                    }
                }
                agent.history = std::move(kept);
                break;
            }
            case RoleKind::expert:
                break;
        }
    }
}

RunResult AgentGroup::run_task(const std::string& task_prompt) {
    if (!initialized_) throw std::logic_error("run_task called before init");

    RunResult result;
    Agent& leader = agents_.front();
    leader.pinned.push_back({Role::user, task_prompt});

    try {
        while (turn_ < config_.limits.max_leader_turns) {
            ++turn_;
            const std::string out = generate(leader);
            leader.history.push_back(
                {{Role::assistant, out}, EntryKind::leader_output, round_});

            const Outgoing parsed = parse_outgoing(out);
            if (parsed.kind == Outgoing::Kind::terminal) break;
            if (detect_duplicate(parsed.body)) continue;

            TranscriptEvent ev;
            ev.turn = turn_;
            ev.sender = "Agent 0";
            ev.receiver = "broadcast";
            ev.content = parsed.body;
            if (parsed.misplaced_marker) ev.tags.push_back(EventTag::misplaced_marker);
            transcript_.events.push_back(std::move(ev));

            broadcast_round(parsed.body);
            prune();
            if (after_round) after_round(*this, round_);
        }

        leader.history.push_back({{Role::user, config_.protocol.final_answer_elicitation},
                                  EntryKind::correction, round_});
        TranscriptEvent ask;
        ask.turn = turn_;
        ask.sender = "system";
        ask.receiver = "leader";
        ask.content = config_.protocol.final_answer_elicitation;
        transcript_.events.push_back(std::move(ask));

        const std::string final_answer = generate(leader);
        leader.history.push_back(
            {{Role::assistant, final_answer}, EntryKind::leader_output, round_});
        TranscriptEvent fin;
        fin.turn = turn_;
        fin.sender = "Agent 0";
        fin.receiver = "user";
        fin.content = final_answer;
        transcript_.events.push_back(std::move(fin));

        result.final_answer = final_answer;
    } catch (const TokenLimitError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
    }
    result.transcript = transcript_;
    result.rounds = round_;
    return result;
}

}  // namespace marg
