#pragma once

#include <string>
#include <vector>

namespace marg {

// Tags attached to transcript events. The correction tags mark injected
// messages; no_response marks a reply that matched a no-response marker and
// was therefore excluded from the leader's history.
enum class EventTag {
    duplicate_interjection,
    protocol_reminder,
    no_response_followup,
    misplaced_marker,
    no_response,
};

const char* to_string(EventTag tag);
EventTag event_tag_from_string(const std::string& s);

struct TranscriptEvent {
    int turn = 0;                 // leader turn index, 1-based
    std::string sender;           // agent label, or "system" for injections
    std::string receiver;         // "broadcast", "leader", "user", or an agent label
    std::string content;
    std::vector<EventTag> tags;

    bool has_tag(EventTag tag) const;
};

struct GroupTranscript {
    std::string group_label;
    std::vector<TranscriptEvent> events;

    int count_tag(EventTag tag) const;

    // JSON-lines form: one header line, then one event per line.
    std::string to_jsonl() const;
    static GroupTranscript from_jsonl(const std::string& text);
};

}  // namespace marg
