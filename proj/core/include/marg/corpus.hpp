#pragma once

#include <optional>
#include <string>
#include <vector>

#include "marg/tokens.hpp"

namespace marg {

// One named section of a structured paper. Captions are carried along for
// methods that want figure/table captions in their rendered input.
struct Section {
    std::string name;
    std::vector<std::string> paragraphs;
    std::vector<std::string> captions;
};

// Ordered sections of ordered paragraphs; the unit of ingestion.
struct StructuredPaper {
    std::string title;
    std::vector<Section> sections;

    int paragraph_count() const;
};

// A paragraph annotated with its 1-based position in the paper and the name
// of the section it appears in. `rendered` is the exact text handed to the
// model; `token_count` is the counter applied to `rendered`.
struct AnnotatedParagraph {
    int global_index = 0;
    std::string section_name;
    std::string body;
    std::string rendered;
    int token_count = 0;
    // Set when this paragraph is one fragment of an oversize paragraph that
    // had to be hard-split. Fragments share the original global_index and
    // their rendered texts concatenate to the original rendered text.
    bool is_fragment = false;
};

// A contiguous, paragraph-aligned slice of the paper within a token budget.
struct PaperChunk {
    int chunk_index = 0;  // 1-based
    std::vector<AnnotatedParagraph> paragraphs;
    std::string text;     // rendered paragraphs joined by one blank line
    int token_count = 0;
};

// Parses the structured-text ingestion schema:
//   {"title": ..., "sections": [{"name", "paragraphs": [...], "captions": [...]?}]}
// Whitespace is normalized and empty paragraphs dropped.
// Throws SchemaError on malformed input, EmptyPaperError if nothing remains.
StructuredPaper ingest(const std::string& json_text);

// Convenience: read the file at `path` and ingest it.
StructuredPaper ingest_file(const std::string& path);

// Flattens the paper into annotated paragraphs, assigning global indices
// 1..P in order. Rendered form: "[Section: <name>] Paragraph <k>: <body>".
std::vector<AnnotatedParagraph> annotate(const StructuredPaper& paper,
                                         const TokenCounter& counter = count_tokens);

constexpr int kDefaultChunkBudget = 4096;
constexpr int kMinChunkBudget = 64;

// Greedy left-to-right fill on paragraph boundaries: a paragraph joins the
// current chunk iff the running token count plus its own stays within
// `budget`; otherwise a new chunk starts. A single paragraph over budget is
// hard-split, first at sentence boundaries and then at token-run boundaries,
// each fragment becoming its own chunk.
std::vector<PaperChunk> chunk(const std::vector<AnnotatedParagraph>& paragraphs,
                              int budget = kDefaultChunkBudget,
                              const TokenCounter& counter = count_tokens);

}  // namespace marg
