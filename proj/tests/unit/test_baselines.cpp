#include <doctest.h>

#include <marg/baselines.hpp>
#include <marg/scripted_backend.hpp>

#include "test_util.hpp"

using namespace marg;
using marg::test::exchange;
using marg::test::exchange_h;
using marg::test::small_chunks;
using marg::test::words;

namespace {

PipelineOptions default_opts() {
    PipelineOptions opts;
    opts.paper_id = "p1";
    return opts;
}

Script sarg_b_script() {
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "chunkmark1", "1. A1.\n2. A2."),
        exchange("", "chunkmark2", "1. B1.\n2. B2."),
        exchange("", "chunkmark3", "1. C1."),
        exchange("", "Merge these lists", "1. M1.\n2. M2.\n3. M3.\n4. M4."),
    };
    return script;
}

}  // namespace

TEST_CASE("sarg_b: one completion per chunk plus one merge") {
    const auto bundle = PromptBundle::defaults();
    ScriptedBackend inner(sarg_b_script());
    marg::test::RecordingBackend backend(inner);
    const auto result = sarg_b_review(small_chunks(3), backend, bundle, default_opts());
    CHECK(result.review.method_label == "SARG-B");
    REQUIRE(result.review.comments.size() == 4);
    CHECK(result.review.comments[0].text == "M1.");
    CHECK(backend.requests.size() == 4);
    CHECK(inner.ledger().size() == 4);

    // Merge input presents the per-chunk lists in chunk order.
    const std::string& merge_prompt = backend.requests.back().messages.back().content;
    const size_t a = merge_prompt.find("A1.");
    const size_t b = merge_prompt.find("B1.");
    const size_t c = merge_prompt.find("C1.");
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    REQUIRE(c != std::string::npos);
    CHECK(a < b);
    CHECK(b < c);
}

TEST_CASE("sarg_b: single chunk still runs the merge") {
    const auto bundle = PromptBundle::defaults();
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "chunkmark1", "1. Only."),
        exchange("", "Merge these lists", "1. Only, merged."),
    };
    ScriptedBackend backend(script);
    const auto result = sarg_b_review(small_chunks(1), backend, bundle, default_opts());
    CHECK(result.review.comments.size() == 1);
    CHECK(backend.ledger().size() == 2);
}

TEST_CASE("sarg_b: failed chunk tolerated, merge sees the remaining lists") {
    const auto bundle = PromptBundle::defaults();
    // Chunk 2 is large enough that its request overflows a reduced backend
    // limit; the other chunks and the merge still go through.
    StructuredPaper paper;
    paper.title = "T";
    Section sec;
    sec.name = "Body";
    sec.paragraphs = {"chunkmark1 " + words(80), "chunkmark2 " + words(400),
                      "chunkmark3 " + words(80)};
    paper.sections.push_back(sec);
    const auto chunks = chunk(annotate(paper), 448);
    REQUIRE(chunks.size() == 3);

    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "chunkmark1", "1. A1."),
        exchange("", "chunkmark3", "1. C1."),
        exchange("", "Merge these lists", "1. M1.\n2. M2."),
    };
    // Limit small enough that the chunk-2 request overflows (prompt + chunk).
    ScriptedBackend backend(script, 400);
    const auto result = sarg_b_review(chunks, backend, bundle, default_opts());
    CHECK(result.review.comments.size() == 2);
    REQUIRE(result.review.errors.size() == 1);
    CHECK(backend.ledger().size() == 3);
}

TEST_CASE("sarg_tp: chunk completions, merge, then sequential refinement") {
    const auto bundle = PromptBundle::defaults();
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange_h("", "Task: Write a list", "chunkmark1", "1. T1.\n2. T2."),
        exchange_h("", "Task: Write a list", "chunkmark2", "1. T3."),
        exchange_h("", "Task: Write a list", "chunkmark3", "1. T4."),
        exchange("", "Merge these lists", "1. M1.\n2. M2.\n3. M3.\n4. M4."),
        // First refinement pass deletes M4; later passes keep the list.
        exchange_h("", "refined list", "chunkmark1", "1. M1.\n2. M2.\n3. M3.", 1),
        exchange_h("", "refined list", "chunkmark2", "1. M1.\n2. M2.\n3. M3.", 1),
        exchange_h("", "refined list", "chunkmark3", "1. M1.\n2. M2.\n3. M3.", 1),
    };
    ScriptedBackend inner(script);
    marg::test::RecordingBackend backend(inner);
    const auto result = sarg_tp_review(small_chunks(3), backend, bundle, default_opts());
    CHECK(result.review.method_label == "SARG-TP");
    REQUIRE(result.review.comments.size() == 3);  // refinement pruned one
    CHECK(inner.ledger().size() == 7);            // 3 + 1 + 3

    // Pass 2 must see pass 1's list, not the merged list.
    REQUIRE(backend.requests.size() == 7);
    const std::string& pass2 = backend.requests[5].messages.back().content;
    CHECK(pass2.find("M1.") != std::string::npos);
    CHECK(pass2.find("M4.") == std::string::npos);
}

TEST_CASE("sarg_tp: zero-comment merge still runs every refinement pass") {
    const auto bundle = PromptBundle::defaults();
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "Task: Write a list", ""),
        exchange("", "Merge these lists", ""),
        exchange("", "refined list", ""),
    };
    ScriptedBackend backend(script);
    const auto result = sarg_tp_review(small_chunks(2), backend, bundle, default_opts());
    CHECK(result.review.comments.empty());
    CHECK(backend.ledger().size() == 5);  // 2 + 1 + 2
}

TEST_CASE("lizca: paper within budget runs exactly two completions") {
    const auto bundle = PromptBundle::defaults();
    StructuredPaper paper = marg::test::small_paper(3);
    paper.sections[0].captions = {"Figure 1: widget diagram."};
    const auto paragraphs = annotate(paper);

    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "PAPER START", "Outline: strengths; weaknesses; suggestions."),
        exchange("", "outline", "1. L1.\n2. L2."),
    };
    ScriptedBackend inner(script);
    marg::test::RecordingBackend backend(inner);
    const auto result = lizca_review(paper, paragraphs, backend, bundle, default_opts());
    CHECK(result.review.method_label == "LiZCa");
    CHECK(result.review.comments.size() == 2);
    CHECK(inner.ledger().size() == 2);

    // Untruncated: every paragraph and the caption made it into the prompt.
    const std::string& outline_prompt = backend.requests[0].messages.back().content;
    CHECK(outline_prompt.find("Paragraph 3") != std::string::npos);
    CHECK(outline_prompt.find("Figure 1: widget diagram.") != std::string::npos);
    CHECK(outline_prompt.find("Title: A Study of Widgets") != std::string::npos);
}

TEST_CASE("lizca: long paper truncated at a paragraph boundary") {
    const auto bundle = PromptBundle::defaults();
    StructuredPaper paper;
    paper.title = "Long";
    Section sec;
    sec.name = "Body";
    for (int i = 0; i < 40; ++i) sec.paragraphs.push_back(words(500));  // ~20k tokens
    paper.sections.push_back(sec);
    const auto paragraphs = annotate(paper);

    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "PAPER START", "Outline."),
        exchange("", "outline", "1. X."),
    };
    ScriptedBackend inner(script, /*input_token_limit=*/16384);
    marg::test::RecordingBackend backend(inner);
    auto opts = default_opts();
    opts.lizca_truncation_budget = 6000;
    const auto result = lizca_review(paper, paragraphs, backend, bundle, opts);
    CHECK(result.review.errors.empty());

    const std::string& prompt = backend.requests[0].messages.back().content;
    const size_t start = prompt.find("--- PAPER START ---\n");
    const size_t end = prompt.find("\n--- PAPER END ---");
    REQUIRE(start != std::string::npos);
    REQUIRE(end != std::string::npos);
    const std::string rendered =
        prompt.substr(start + 20, end - (start + 20));
    CHECK(count_tokens(rendered) <= 6000);
    // Cut lands between paragraphs: the rendering ends with a whole
    // paragraph (its final token run), never mid-paragraph.
    CHECK(rendered.rfind("] Paragraph ") != std::string::npos);
    const size_t last_para = rendered.rfind("[Section: Body] Paragraph ");
    const std::string tail = rendered.substr(last_para);
    bool matches_whole = false;
    for (const auto& p : paragraphs) {
        if (tail == p.rendered) matches_whole = true;
    }
    CHECK(matches_whole);
}

TEST_CASE("lizca: captions excluded when the flag is off") {
    const auto bundle = PromptBundle::defaults();
    StructuredPaper paper = marg::test::small_paper(1);
    paper.sections[0].captions = {"Figure 9: hidden."};
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "PAPER START", "Outline."),
        exchange("", "outline", "1. X."),
    };
    ScriptedBackend inner(script);
    marg::test::RecordingBackend backend(inner);
    auto opts = default_opts();
    opts.lizca_include_captions = false;
    lizca_review(paper, annotate(paper), backend, bundle, opts);
    CHECK(backend.requests[0].messages.back().content.find("Figure 9") == std::string::npos);
}
