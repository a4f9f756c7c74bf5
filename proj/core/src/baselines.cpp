#include "marg/baselines.hpp"

#include <iostream>

#include "marg/errors.hpp"
#include "marg/tokens.hpp"

namespace marg {

namespace {

std::string complete_text(Backend& backend, const PipelineOptions& opts, const CallContext& ctx,
                          std::vector<ChatMessage> messages) {
    CompletionRequest request;
    request.model_id = opts.model_id;
    request.messages = std::move(messages);
    request.sampling = opts.sampling;
    return backend.complete(request, ctx).content;
}

std::string render_comment_lists(const std::vector<std::vector<std::string>>& lists) {
    std::string out;
    for (size_t i = 0; i < lists.size(); ++i) {
        if (!out.empty()) out += "\n\n";
        out += "Comments for portion " + std::to_string(i + 1) + ":\n" +
               render_numbered(lists[i]);
    }
    return out;
}

void finish_review(Review& review, const Backend& backend, size_t first_entry,
                   const std::vector<std::string>& texts, CommentStage stage) {
    for (const auto& text : texts) {
        ReviewComment c;
        c.text = text;
        c.method_label = review.method_label;
        c.stage = stage;
        review.comments.push_back(std::move(c));
    }
    const auto entries = backend.ledger().entries();
    for (size_t i = first_entry; i < entries.size(); ++i) {
        review.input_tokens += entries[i].input_tokens;
        review.generated_tokens += entries[i].generated_tokens;
    }
}

std::vector<std::string> flatten(const std::vector<std::vector<std::string>>& lists) {
    std::vector<std::string> out;
    for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
    return out;
}

}  // namespace

PipelineResult sarg_b_review(const std::vector<PaperChunk>& chunks, Backend& backend,
                             const PromptBundle& bundle, const PipelineOptions& opts) {
    PipelineResult out;
    Review& review = out.review;
    review.paper_id = opts.paper_id;
    review.method_label = "SARG-B";
    const size_t usage_start = backend.ledger().size();
    const CallContext ctx{"SARG-B", opts.paper_id, ""};

    std::vector<std::vector<std::string>> lists;
    for (const auto& chunk : chunks) {
        try {
            const std::string reply = complete_text(
                backend, opts, ctx,
                {{Role::system, bundle.get("sarg_b.system")},
                 {Role::user, fill_template(bundle.get("sarg_b.task"),
                                            {{"paper_chunk", chunk.text}})}});
            lists.push_back(parse_comment_list(reply));
        } catch (const TokenLimitError& e) {
            review.errors.push_back("chunk " + std::to_string(chunk.chunk_index) +
                                    " skipped: " + e.what());
        }
    }

    std::vector<std::string> merged;
    try {
        const std::string reply = complete_text(
            backend, opts, ctx,
            {{Role::system, bundle.get("sarg_b.system")},
             {Role::user, fill_template(bundle.get("sarg_b.merge"),
                                        {{"comment_lists", render_comment_lists(lists)}})}});
        merged = parse_comment_list(reply);
    } catch (const TokenLimitError& e) {
        std::cerr << "[warn] SARG-B merge failed, using union of per-chunk lists\n";
        review.errors.push_back(std::string("merge failed: ") + e.what());
        merged = flatten(lists);
    }
    finish_review(review, backend, usage_start, merged, CommentStage::initial);
    return out;
}

PipelineResult sarg_tp_review(const std::vector<PaperChunk>& chunks, Backend& backend,
                              const PromptBundle& bundle, const PipelineOptions& opts) {
    PipelineResult out;
    Review& review = out.review;
    review.paper_id = opts.paper_id;
    review.method_label = "SARG-TP";
    const size_t usage_start = backend.ledger().size();
    const CallContext ctx{"SARG-TP", opts.paper_id, ""};

    // The chunk is introduced with its own prompt and a fixed "Ready" turn,
    // so the chunk and the task stay separate messages without spending an
    // extra completion on the acknowledgment.
    auto chunk_preamble = [&](const PaperChunk& chunk) {
        return std::vector<ChatMessage>{
            {Role::system, bundle.get("sarg_tp.system")},
            {Role::user,
             fill_template(bundle.get("sarg_tp.chunk"), {{"paper_chunk", chunk.text}})},
            {Role::assistant, "Ready"}};
    };

    std::vector<std::vector<std::string>> lists;
    for (const auto& chunk : chunks) {
        try {
            auto messages = chunk_preamble(chunk);
            messages.push_back({Role::user, bundle.get("sarg_tp.task")});
            lists.push_back(parse_comment_list(complete_text(backend, opts, ctx, messages)));
        } catch (const TokenLimitError& e) {
            review.errors.push_back("chunk " + std::to_string(chunk.chunk_index) +
                                    " skipped: " + e.what());
        }
    }

    std::vector<std::string> current;
    try {
        const std::string reply = complete_text(
            backend, opts, ctx,
            {{Role::system, bundle.get("sarg_tp.system")},
             {Role::user, fill_template(bundle.get("sarg_tp.merge"),
                                        {{"comment_lists", render_comment_lists(lists)}})}});
        current = parse_comment_list(reply);
    } catch (const TokenLimitError& e) {
        std::cerr << "[warn] SARG-TP merge failed, using union of per-chunk lists\n";
        review.errors.push_back(std::string("merge failed: ") + e.what());
        current = flatten(lists);
    }

    // Sequential per-chunk refinement; each pass sees the previous pass's
    // list and may prune, rewrite, or keep items.
    for (const auto& chunk : chunks) {
        try {
            auto messages = chunk_preamble(chunk);
            messages.push_back(
                {Role::user, fill_template(bundle.get("sarg_tp.refinement"),
                                           {{"review_comments", render_numbered(current)}})});
            current = parse_comment_list(complete_text(backend, opts, ctx, messages));
        } catch (const TokenLimitError& e) {
            review.errors.push_back("refinement pass for chunk " +
                                    std::to_string(chunk.chunk_index) + " skipped: " + e.what());
        }
    }
    finish_review(review, backend, usage_start, current, CommentStage::refined);
    return out;
}

PipelineResult lizca_review(const StructuredPaper& paper,
                            const std::vector<AnnotatedParagraph>& paragraphs, Backend& backend,
                            const PromptBundle& bundle, const PipelineOptions& opts) {
    PipelineResult out;
    Review& review = out.review;
    review.paper_id = opts.paper_id;
    review.method_label = "LiZCa";
    const size_t usage_start = backend.ledger().size();
    const CallContext ctx{"LiZCa", opts.paper_id, ""};

    const int budget = opts.lizca_truncation_budget.value_or(
        opts.limits.input_token_limit - 1500);

    // Units are whole paragraphs (and caption lines); truncation keeps the
    // longest prefix of units that fits the budget.
    std::vector<std::string> units;
    units.push_back("Title: " + paper.title);
    for (const auto& p : paragraphs) units.push_back(p.rendered);
    if (opts.lizca_include_captions) {
        std::vector<std::string> captions;
        for (const auto& sec : paper.sections) {
            for (const auto& cap : sec.captions) captions.push_back("- " + cap);
        }
        if (!captions.empty()) {
            units.push_back("Figure and table captions:");
            units.insert(units.end(), captions.begin(), captions.end());
        }
    }

    std::string rendered;
    int used = 0;
    for (const auto& unit : units) {
        const int t = count_tokens(unit);
        if (!rendered.empty() && used + t > budget) break;
        if (!rendered.empty()) rendered += "\n\n";
        rendered += unit;
        used += t;
        if (used > budget) break;  // oversize first unit: keep it alone
    }

    try {
        const std::string outline = complete_text(
            backend, opts, ctx,
            {{Role::system, bundle.get("lizca.system")},
             {Role::user,
              fill_template(bundle.get("lizca.outline"), {{"paper_text", rendered}})}});
        const std::string extraction = complete_text(
            backend, opts, ctx,
            {{Role::system, bundle.get("lizca.system")},
             {Role::user, fill_template(bundle.get("lizca.criticisms"), {{"outline", outline}})}});
        finish_review(review, backend, usage_start, parse_comment_list(extraction),
                      CommentStage::initial);
    } catch (const TokenLimitError& e) {
        review.errors.push_back(std::string("aborted: ") + e.what());
        finish_review(review, backend, usage_start, {}, CommentStage::initial);
    }
    return out;
}

}  // namespace marg
