#include "marg/review.hpp"

#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "marg/errors.hpp"

namespace marg {

namespace {
using nlohmann::json;

constexpr int kReviewSchemaVersion = 1;

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Folds a leading "**Header**:" into the item body without the asterisks.
std::string strip_bold_header(const std::string& item) {
    if (item.rfind("**", 0) != 0) return item;
    const size_t close = item.find("**", 2);
    if (close == std::string::npos) return item;
    std::string header = trim(item.substr(2, close - 2));
    while (!header.empty() && header.back() == ':') header.pop_back();
    size_t rest_begin = close + 2;
    while (rest_begin < item.size() &&
           (item[rest_begin] == ':' || std::isspace(static_cast<unsigned char>(item[rest_begin])))) {
        ++rest_begin;
    }
    const std::string rest = trim(item.substr(rest_begin));
    if (header.empty()) return rest;
    if (rest.empty()) return header;
    return header + ": " + rest;
}

// Extracts string items from a parsed JSON payload list.
std::vector<std::string> items_from_json_array(const json& arr) {
    std::vector<std::string> out;
    for (const auto& el : arr) {
        std::string text;
        if (el.is_string()) {
            text = el.get<std::string>();
        } else if (el.is_object()) {
            if (el.contains("text") && el["text"].is_string()) {
                text = el["text"].get<std::string>();
            } else if (el.contains("comment") && el["comment"].is_string()) {
                text = el["comment"].get<std::string>();
            } else {
                text = el.dump();
            }
        } else {
            continue;
        }
        text = trim(text);
        if (!text.empty()) out.push_back(std::move(text));
    }
    return out;
}

// Finds the end of a balanced JSON value starting at `start` (which must be
// '{' or '['), honoring strings and escapes. Returns npos if unbalanced.
size_t balanced_end(const std::string& s, size_t start) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
        } else if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (--depth == 0) return i;
        }
    }
    return std::string::npos;
}

// Scans the text for a JSON comment payload. Returns true when one was
// found, filling `items` (an empty list is a valid payload: pruned).
bool try_json_payload(const std::string& text, std::vector<std::string>* items) {
    for (size_t pos = 0; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (c != '{' && c != '[') continue;
        const size_t end = balanced_end(text, pos);
        if (end == std::string::npos) continue;
        json doc = json::parse(text.substr(pos, end - pos + 1), nullptr, false);
        if (doc.is_discarded()) continue;
        if (doc.is_object()) {
            for (const char* key : {"comments", "revised_comments", "revised_comment"}) {
                if (!doc.contains(key)) continue;
                const json& v = doc[key];
                if (v.is_array()) {
                    *items = items_from_json_array(v);
                    return true;
                }
                if (v.is_string()) {
                    const std::string one = trim(v.get<std::string>());
                    items->clear();
                    if (!one.empty()) items->push_back(one);
                    return true;
                }
                if (v.is_null()) {
                    items->clear();
                    return true;
                }
            }
        } else if (doc.is_array() && !doc.empty()) {
            bool plausible = true;
            for (const auto& el : doc) {
                if (!el.is_string() && !el.is_object()) {
                    plausible = false;
                    break;
                }
            }
            if (plausible) {
                *items = items_from_json_array(doc);
                return true;
            }
        }
        pos = end;
    }
    return false;
}

// True when a line begins a list item; sets `body_begin` past the marker.
bool numbered_item_start(const std::string& line, size_t* body_begin) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t d = i;
    while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
    if (d == i || d - i > 3) return false;
    if (d >= line.size() || (line[d] != '.' && line[d] != ')')) return false;
    size_t b = d + 1;
    if (b >= line.size() || !std::isspace(static_cast<unsigned char>(line[b]))) return false;
    *body_begin = b + 1;
    return true;
}

bool bullet_item_start(const std::string& line, size_t* body_begin) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || (line[i] != '-' && line[i] != '*')) return false;
    if (i + 1 >= line.size() || !std::isspace(static_cast<unsigned char>(line[i + 1]))) return false;
    *body_begin = i + 2;
    return true;
}

std::vector<std::string> parse_line_items(
    const std::string& text, bool (*starts)(const std::string&, size_t*)) {
    std::vector<std::string> items;
    std::istringstream in(text);
    std::string line;
    std::string current;
    bool in_item = false;
    auto flush = [&] {
        if (!in_item) return;
        const std::string item = strip_bold_header(trim(current));
        if (!item.empty()) items.push_back(item);
        current.clear();
    };
    while (std::getline(in, line)) {
        size_t body_begin = 0;
        if (starts(line, &body_begin)) {
            flush();
            in_item = true;
            current = line.substr(body_begin);
        } else if (in_item) {
            current += "\n" + line;
        }
    }
    flush();
    return items;
}

}  // namespace

const char* to_string(GroupKind kind) {
    switch (kind) {
        case GroupKind::experiments: return "experiments";
        case GroupKind::clarity: return "clarity";
        case GroupKind::impact: return "impact";
    }
    return "experiments";
}

const char* to_string(CommentStage stage) {
    return stage == CommentStage::initial ? "initial" : "refined";
}

std::vector<std::string> parse_comment_list(const std::string& final_answer) {
    std::vector<std::string> items;
    if (try_json_payload(final_answer, &items)) return items;

    items = parse_line_items(final_answer, numbered_item_start);
    if (!items.empty()) return items;

    items = parse_line_items(final_answer, bullet_item_start);
    if (!items.empty()) return items;

    const std::string whole = trim(final_answer);
    if (!whole.empty()) items.push_back(whole);
    return items;
}

namespace {

GroupKind group_kind_from_string(const std::string& s) {
    if (s == "experiments") return GroupKind::experiments;
    if (s == "clarity") return GroupKind::clarity;
    if (s == "impact") return GroupKind::impact;
    throw SchemaError("unknown group_kind: " + s);
}

}  // namespace

std::string review_to_json(const Review& review, const std::string& generated_at) {
    json comments = json::array();
    for (const auto& c : review.comments) {
        json item;
        item["text"] = c.text;
        if (c.group_kind) item["group_kind"] = to_string(*c.group_kind);
        item["stage"] = to_string(c.stage);
        if (c.origin_index) item["origin_index"] = *c.origin_index;
        if (c.flagged) item["flagged"] = true;
        comments.push_back(std::move(item));
    }
    json doc;
    doc["schema_version"] = kReviewSchemaVersion;
    doc["paper_id"] = review.paper_id;
    doc["method_label"] = review.method_label;
    doc["comments"] = std::move(comments);
    doc["errors"] = review.errors;
    doc["usage"] = {{"input_tokens", review.input_tokens},
                    {"generated_tokens", review.generated_tokens}};
    if (!generated_at.empty()) doc["meta"] = {{"generated_at", generated_at}};
    return doc.dump(2) + "\n";
}

Review review_from_json(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw SchemaError("review is not a JSON object");
    if (!doc.contains("comments") || !doc["comments"].is_array())
        throw SchemaError("review missing 'comments' array");

    Review review;
    review.paper_id = doc.value("paper_id", std::string());
    review.method_label = doc.value("method_label", std::string());
    for (const auto& item : doc["comments"]) {
        // Hand-written review files may carry bare strings; the persisted
        // form is an object with provenance fields.
        if (item.is_string()) {
            ReviewComment c;
            c.text = item.get<std::string>();
            c.method_label = review.method_label;
            review.comments.push_back(std::move(c));
            continue;
        }
        if (!item.is_object() || !item.contains("text") || !item["text"].is_string())
            throw SchemaError("review comment missing string 'text'");
        ReviewComment c;
        c.text = item["text"].get<std::string>();
        c.method_label = review.method_label;
        if (item.contains("group_kind") && item["group_kind"].is_string())
            c.group_kind = group_kind_from_string(item["group_kind"].get<std::string>());
        c.stage = item.value("stage", std::string("initial")) == "refined"
                      ? CommentStage::refined
                      : CommentStage::initial;
        if (item.contains("origin_index") && item["origin_index"].is_number_integer())
            c.origin_index = item["origin_index"].get<int>();
        c.flagged = item.value("flagged", false);
        review.comments.push_back(std::move(c));
    }
    if (doc.contains("errors") && doc["errors"].is_array()) {
        for (const auto& e : doc["errors"]) {
            if (e.is_string()) review.errors.push_back(e.get<std::string>());
        }
    }
    if (doc.contains("usage") && doc["usage"].is_object()) {
        review.input_tokens = doc["usage"].value("input_tokens", 0LL);
        review.generated_tokens = doc["usage"].value("generated_tokens", 0LL);
    }
    return review;
}

}  // namespace marg
