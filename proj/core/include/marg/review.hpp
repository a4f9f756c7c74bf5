#pragma once

#include <optional>
#include <string>
#include <vector>

namespace marg {

enum class GroupKind { experiments, clarity, impact };
enum class CommentStage { initial, refined };

const char* to_string(GroupKind kind);
const char* to_string(CommentStage stage);

// One actionable feedback item with provenance.
struct ReviewComment {
    std::string text;
    std::string method_label;
    std::optional<GroupKind> group_kind;
    CommentStage stage = CommentStage::initial;
    // Index of the initial comment a refined one came from (0-based over the
    // concatenated initial review).
    std::optional<int> origin_index;
    // Set when a refinement group failed and the original passed through.
    bool flagged = false;
};

struct Review {
    std::string paper_id;
    std::string method_label;
    std::vector<ReviewComment> comments;
    std::vector<std::string> errors;  // partial-failure records
    long long input_tokens = 0;
    long long generated_tokens = 0;
};

// Extracts a comment list from a final answer. Priority: a JSON payload
// (array, or object keyed "comments"/"revised_comments"/"revised_comment"),
// then numbered lines ("1." / "1)"), then bullet lines ("-" / "*"). Bold
// "**Header**:" prefixes are folded into the item body. Text with no list
// structure yields one comment equal to the trimmed text; empty text yields
// none.
std::vector<std::string> parse_comment_list(const std::string& final_answer);

// JSON persistence (schema_version 1).
std::string review_to_json(const Review& review, const std::string& generated_at = "");
Review review_from_json(const std::string& json_text);

}  // namespace marg
