#include "marg/transcript.hpp"

#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "marg/errors.hpp"

namespace marg {

namespace {
using nlohmann::json;
constexpr int kTranscriptSchemaVersion = 1;
}  // namespace

const char* to_string(EventTag tag) {
    switch (tag) {
        case EventTag::duplicate_interjection: return "duplicate_interjection";
        case EventTag::protocol_reminder: return "protocol_reminder";
        case EventTag::no_response_followup: return "no_response_followup";
        case EventTag::misplaced_marker: return "misplaced_marker";
        case EventTag::no_response: return "no_response";
    }
    return "unknown";
}

EventTag event_tag_from_string(const std::string& s) {
    if (s == "duplicate_interjection") return EventTag::duplicate_interjection;
    if (s == "protocol_reminder") return EventTag::protocol_reminder;
    if (s == "no_response_followup") return EventTag::no_response_followup;
    if (s == "misplaced_marker") return EventTag::misplaced_marker;
    if (s == "no_response") return EventTag::no_response;
    throw std::invalid_argument("unknown event tag: " + s);
}

bool TranscriptEvent::has_tag(EventTag tag) const {
    for (EventTag t : tags) {
        if (t == tag) return true;
    }
    return false;
}

int GroupTranscript::count_tag(EventTag tag) const {
    int n = 0;
    for (const auto& e : events) {
        if (e.has_tag(tag)) ++n;
    }
    return n;
}

std::string GroupTranscript::to_jsonl() const {
    std::ostringstream out;
    json header = {{"schema_version", kTranscriptSchemaVersion},
                   {"kind", "group_transcript"},
                   {"group", group_label}};
    out << header.dump() << "\n";
    for (const auto& e : events) {
        json tags = json::array();
        for (EventTag t : e.tags) tags.push_back(to_string(t));
        json line = {{"turn", e.turn},
                     {"sender", e.sender},
                     {"receiver", e.receiver},
                     {"content", e.content},
                     {"tags", std::move(tags)}};
        out << line.dump() << "\n";
    }
    return out.str();
}

GroupTranscript GroupTranscript::from_jsonl(const std::string& text) {
    GroupTranscript t;
    std::istringstream in(text);
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            throw SchemaError("transcript line is not a JSON object");
        if (!saw_header) {
            if (doc.value("kind", std::string()) != "group_transcript")
                throw SchemaError("transcript header missing or wrong kind");
            t.group_label = doc.value("group", std::string());
            saw_header = true;
            continue;
        }
        TranscriptEvent e;
        e.turn = doc.value("turn", 0);
        e.sender = doc.value("sender", std::string());
        e.receiver = doc.value("receiver", std::string());
        e.content = doc.value("content", std::string());
        if (doc.contains("tags")) {
            for (const auto& tag : doc["tags"]) {
                e.tags.push_back(event_tag_from_string(tag.get<std::string>()));
            }
        }
        t.events.push_back(std::move(e));
    }
    if (!saw_header) throw SchemaError("transcript has no header line");
    return t;
}

}  // namespace marg
