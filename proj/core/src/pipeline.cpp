#include "marg/pipeline.hpp"

#include <iostream>

#include "marg/errors.hpp"

namespace marg {

namespace {

std::string kind_key(GroupKind kind) {
    return std::string("marg_s.") + to_string(kind);
}

GroupConfig base_group_config(const std::vector<PaperChunk>& chunks, const PromptBundle& bundle,
                              const PipelineOptions& opts, const std::string& prefix) {
    GroupConfig cfg;
    cfg.chunks = chunks;
    cfg.leader_system_prompt = bundle.get(prefix + ".leader_system");
    cfg.worker_system_prompt = bundle.get(prefix + ".worker_system");
    cfg.worker_chunk_template = bundle.get(prefix + ".worker_chunk");
    cfg.agent_info_template = bundle.get("protocol.agent_info");
    cfg.protocol = ProtocolTexts::from_bundle(bundle);
    cfg.limits = opts.limits;
    cfg.model_id = opts.model_id;
    cfg.sampling = opts.sampling;
    cfg.concurrency = opts.concurrency;
    return cfg;
}

void accumulate_usage(Review& review, const Backend& backend, size_t first_entry) {
    const auto entries = backend.ledger().entries();
    for (size_t i = first_entry; i < entries.size(); ++i) {
        review.input_tokens += entries[i].input_tokens;
        review.generated_tokens += entries[i].generated_tokens;
    }
}

}  // namespace

std::string render_numbered(const std::vector<std::string>& items) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
        out += std::to_string(i + 1) + ". " + items[i];
        if (i + 1 < items.size()) out += "\n";
    }
    return out;
}

MiniReviewResult generate_mini_review(const std::vector<PaperChunk>& chunks, GroupKind kind,
                                      Backend& backend, const PromptBundle& bundle,
                                      const PipelineOptions& opts) {
    GroupConfig cfg = base_group_config(chunks, bundle, opts, "marg_s");
    cfg.expert_prompt = bundle.get(kind_key(kind) + ".expert");
    cfg.group_label = to_string(kind);

    const std::string expert_label = "Agent " + std::to_string(chunks.size() + 1);
    const std::string task =
        fill_template(bundle.get(kind_key(kind) + ".task"),
                      {{"expert_1", expert_label}, {"expert_2", expert_label}});

    CallContext ctx{"MARG-S", opts.paper_id, ""};
    AgentGroup group(std::move(cfg), backend, ctx);

    MiniReviewResult result;
    try {
        group.init();
        RunResult run = group.run_task(task);
        result.transcript = run.transcript;
        if (run.aborted) {
            result.error = std::string(to_string(kind)) + " group aborted: " + run.abort_reason;
            return result;
        }
        const auto items = parse_comment_list(run.final_answer);
        if (items.empty()) {
            std::cerr << "[warn] " << to_string(kind) << " group produced an empty review\n";
        }
        for (const auto& text : items) {
            ReviewComment c;
            c.text = text;
            c.group_kind = kind;
            c.stage = CommentStage::initial;
            result.comments.push_back(std::move(c));
        }
    } catch (const TokenLimitError& e) {
        result.transcript = group.transcript();
        result.error = std::string(to_string(kind)) + " group aborted: " + e.what();
    }
    return result;
}

RefineResult refine_comment(const std::vector<PaperChunk>& chunks, const ReviewComment& comment,
                            int origin_index, Backend& backend, const PromptBundle& bundle,
                            const PipelineOptions& opts) {
    // Refinement always uses a fresh group with no expert agent.
    GroupConfig cfg = base_group_config(chunks, bundle, opts, "marg_s");
    cfg.group_label = "refine-" + std::to_string(origin_index);

    const std::string task =
        fill_template(bundle.get("marg_s.refinement"), {{"review_comments", comment.text}});

    CallContext ctx{comment.method_label.empty() ? "MARG-S" : comment.method_label,
                    opts.paper_id, ""};
    AgentGroup group(std::move(cfg), backend, ctx);

    RefineResult result;
    auto pass_through = [&](const std::string& why) {
        ReviewComment kept = comment;
        kept.origin_index = origin_index;
        kept.flagged = true;
        result.comments = {std::move(kept)};
        result.error = "refinement of comment " + std::to_string(origin_index) +
                       " aborted, original kept: " + why;
    };
    try {
        group.init();
        RunResult run = group.run_task(task);
        result.transcript = run.transcript;
        if (run.aborted) {
            pass_through(run.abort_reason);
            return result;
        }
        for (const auto& text : parse_comment_list(run.final_answer)) {
            ReviewComment c;
            c.text = text;
            c.method_label = comment.method_label;
            c.group_kind = comment.group_kind;
            c.stage = CommentStage::refined;
            c.origin_index = origin_index;
            result.comments.push_back(std::move(c));
        }
    } catch (const TokenLimitError& e) {
        result.transcript = group.transcript();
        pass_through(e.what());
    }
    return result;
}

PipelineResult marg_s_review(const std::vector<PaperChunk>& chunks, Backend& backend,
                             const PromptBundle& bundle, const PipelineOptions& opts) {
    PipelineResult out;
    Review& review = out.review;
    review.paper_id = opts.paper_id;
    review.method_label = opts.refinement ? "MARG-S" : "MARG-S-noref";
    const size_t usage_start = backend.ledger().size();

    std::vector<ReviewComment> initial;
    for (GroupKind kind : {GroupKind::experiments, GroupKind::clarity, GroupKind::impact}) {
        MiniReviewResult mini = generate_mini_review(chunks, kind, backend, bundle, opts);
        out.transcripts.push_back(std::move(mini.transcript));
        if (mini.error) review.errors.push_back(*mini.error);
        for (auto& c : mini.comments) {
            c.method_label = review.method_label;
            initial.push_back(std::move(c));
        }
    }

    if (!opts.refinement) {
        review.comments = std::move(initial);
        accumulate_usage(review, backend, usage_start);
        return out;
    }

    // Each comment is processed independently by its own refinement group.
    for (size_t i = 0; i < initial.size(); ++i) {
        RefineResult refined =
            refine_comment(chunks, initial[i], static_cast<int>(i), backend, bundle, opts);
        out.transcripts.push_back(std::move(refined.transcript));
        if (refined.error) review.errors.push_back(*refined.error);
        for (auto& c : refined.comments) review.comments.push_back(std::move(c));
    }
    accumulate_usage(review, backend, usage_start);
    return out;
}

PipelineResult marg_tp_review(const std::vector<PaperChunk>& chunks, Backend& backend,
                              const PromptBundle& bundle, const PipelineOptions& opts) {
    PipelineResult out;
    Review& review = out.review;
    review.paper_id = opts.paper_id;
    review.method_label = "MARG-TP";
    const size_t usage_start = backend.ledger().size();
    CallContext ctx{"MARG-TP", opts.paper_id, ""};

    std::vector<std::string> current;
    {
        GroupConfig cfg = base_group_config(chunks, bundle, opts, "marg_tp");
        cfg.group_label = "main";
        AgentGroup group(std::move(cfg), backend, ctx);
        try {
            group.init();
            RunResult run = group.run_task(bundle.get("marg_tp.task"));
            out.transcripts.push_back(run.transcript);
            if (run.aborted) {
                review.errors.push_back("main group aborted: " + run.abort_reason);
                accumulate_usage(review, backend, usage_start);
                return out;
            }
            current = parse_comment_list(run.final_answer);
        } catch (const TokenLimitError& e) {
            out.transcripts.push_back(group.transcript());
            review.errors.push_back(std::string("main group aborted: ") + e.what());
            accumulate_usage(review, backend, usage_start);
            return out;
        }
    }
    if (current.empty()) {
        std::cerr << "[warn] MARG-TP main group produced an empty review\n";
    }

    CommentStage stage = CommentStage::initial;
    if (opts.refinement && !current.empty()) {
        // One group-wide refinement pass over the whole list, not per chunk.
        GroupConfig cfg = base_group_config(chunks, bundle, opts, "marg_tp");
        cfg.group_label = "refine";
        const std::string task = fill_template(bundle.get("marg_tp.refinement"),
                                               {{"review_comments", render_numbered(current)}});
        AgentGroup group(std::move(cfg), backend, ctx);
        try {
            group.init();
            RunResult run = group.run_task(task);
            out.transcripts.push_back(run.transcript);
            if (run.aborted) {
                review.errors.push_back("refinement group aborted, initial comments kept: " +
                                        run.abort_reason);
            } else {
                current = parse_comment_list(run.final_answer);
                stage = CommentStage::refined;
            }
        } catch (const TokenLimitError& e) {
            out.transcripts.push_back(group.transcript());
            review.errors.push_back(
                std::string("refinement group aborted, initial comments kept: ") + e.what());
        }
    }

    for (const auto& text : current) {
        ReviewComment c;
        c.text = text;
        c.method_label = review.method_label;
        c.stage = stage;
        review.comments.push_back(std::move(c));
    }
    accumulate_usage(review, backend, usage_start);
    return out;
}

}  // namespace marg
