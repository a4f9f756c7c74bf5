#pragma once

#include <optional>
#include <string>
#include <vector>

#include "marg/agent_group.hpp"
#include "marg/backend.hpp"
#include "marg/corpus.hpp"
#include "marg/prompts.hpp"
#include "marg/review.hpp"

namespace marg {

struct PipelineOptions {
    std::string paper_id;
    std::string model_id = "gpt-4-0613";
    SamplingParams sampling;
    GroupLimits limits;
    int concurrency = 1;
    bool refinement = true;  // skip the second stage when false
    // Truncation baseline knobs.
    std::optional<int> lizca_truncation_budget;  // default: input limit - 1500
    bool lizca_include_captions = true;
};

struct PipelineResult {
    Review review;
    std::vector<GroupTranscript> transcripts;
};

// Renders "1. <item>" lines, one per item.
std::string render_numbered(const std::vector<std::string>& items);

struct MiniReviewResult {
    std::vector<ReviewComment> comments;  // stage initial, group_kind set
    GroupTranscript transcript;
    std::optional<std::string> error;  // group aborted
};

// Runs one specialized group (leader, one worker per chunk, one expert) and
// parses its final answer into initial comments.
MiniReviewResult generate_mini_review(const std::vector<PaperChunk>& chunks, GroupKind kind,
                                      Backend& backend, const PromptBundle& bundle,
                                      const PipelineOptions& opts);

struct RefineResult {
    std::vector<ReviewComment> comments;  // 0..k refined comments
    GroupTranscript transcript;
    std::optional<std::string> error;
};

// Refines one initial comment with a fresh expert-free group. An empty
// parsed list prunes the comment; a group abort passes the original through
// flagged.
RefineResult refine_comment(const std::vector<PaperChunk>& chunks, const ReviewComment& comment,
                            int origin_index, Backend& backend, const PromptBundle& bundle,
                            const PipelineOptions& opts);

// Three specialized mini-reviews concatenated in experiments, clarity,
// impact order, each comment refined independently unless refinement is off.
PipelineResult marg_s_review(const std::vector<PaperChunk>& chunks, Backend& backend,
                             const PromptBundle& bundle, const PipelineOptions& opts);

// Single group with the tuned task prompt, then one group-wide refinement
// pass over the full comment list.
PipelineResult marg_tp_review(const std::vector<PaperChunk>& chunks, Backend& backend,
                              const PromptBundle& bundle, const PipelineOptions& opts);

}  // namespace marg
