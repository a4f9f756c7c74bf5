#pragma once

#include "marg/pipeline.hpp"

namespace marg {

// Single agent, basic prompt: one completion per chunk, one merge.
PipelineResult sarg_b_review(const std::vector<PaperChunk>& chunks, Backend& backend,
                             const PromptBundle& bundle, const PipelineOptions& opts);

// Single agent, tuned prompt: one completion per chunk, one merge, then one
// refinement completion per chunk applied sequentially (each pass feeds the
// next the list it produced).
PipelineResult sarg_tp_review(const std::vector<PaperChunk>& chunks, Backend& backend,
                              const PromptBundle& bundle, const PipelineOptions& opts);

// Truncation baseline: render title + annotated paragraphs (+ captions),
// truncate at a paragraph boundary, then exactly two completions: an
// outline-style review and a criticism extraction over it.
PipelineResult lizca_review(const StructuredPaper& paper,
                            const std::vector<AnnotatedParagraph>& paragraphs, Backend& backend,
                            const PromptBundle& bundle, const PipelineOptions& opts);

}  // namespace marg
