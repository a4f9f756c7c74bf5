#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "marg/backend.hpp"
#include "marg/pipeline.hpp"
#include "marg/prompts.hpp"

namespace marg {

// Ordered relatedness levels from the pairwise alignment stage.
enum class Relatedness { none = 0, weak = 1, medium = 2, high = 3 };
// Ordered relative specificity of the generated comment vs the real one.
enum class Specificity { less = 0, same = 1, more = 2 };

const char* to_string(Relatedness r);
const char* to_string(Specificity s);
Relatedness relatedness_from_string(const std::string& s);
Specificity specificity_from_string(const std::string& s);

struct CommentSet {
    enum class Owner { generated, real };
    Owner owner = Owner::generated;
    std::string review_id;
    std::vector<std::string> comments;

    // Deduplicates by exact string, keeping first occurrences in order.
    static CommentSet make(Owner owner, std::string review_id,
                           std::vector<std::string> comments);
    int size() const { return static_cast<int>(comments.size()); }
};

struct CandidatePair {
    int gen_index = 0;
    int real_index = 0;
    int votes = 0;
};

// A scored comment pair. Whether it is a match is decided against the
// relatedness/specificity thresholds, so threshold sweeps never re-query.
struct AlignmentEdge {
    int gen_index = 0;
    int real_index = 0;
    Relatedness relatedness = Relatedness::none;
    Specificity specificity = Specificity::less;
    int votes = 0;
};

struct MetricsReport {
    double recall = 0.0;
    double precision = 0.0;
    double jaccard = 0.0;
    int n_gen = 0;
    int n_real = 0;
    int n_left_aligned = 0;
    int n_right_aligned = 0;
};

// --- backend-driven stages -------------------------------------------------

// One completion with the extraction prompt; the reply is parsed into a
// comment list.
CommentSet extract_comments(const std::string& review_text, const std::string& review_id,
                            Backend& backend, const PromptBundle& bundle,
                            const PipelineOptions& opts,
                            CommentSet::Owner owner = CommentSet::Owner::real);

struct ManyManyParams {
    int passes = 5;
    int vote_threshold = 2;
    std::uint64_t seed = 0;
};

// Five permuted passes over both comment lists; pairs voted by at least
// `vote_threshold` passes survive. Pairs are identified by exact comment
// text and mapped back to canonical indices. An unparseable pass output
// contributes zero votes.
std::vector<CandidatePair> many_many_match(const CommentSet& gen, const CommentSet& real,
                                           Backend& backend, const PromptBundle& bundle,
                                           const PipelineOptions& opts,
                                           const ManyManyParams& params = {});

// One completion per candidate pair. Unparseable output scores (none, less)
// so it can never fabricate a match.
std::pair<Relatedness, Specificity> pairwise_score(const std::string& gen_comment,
                                                   const std::string& real_comment,
                                                   Backend& backend, const PromptBundle& bundle,
                                                   const PipelineOptions& opts);

// One completion with the compliment-detection prompt; reads the JSON
// "has_compliment" field, defaulting to false on unparseable output.
bool detect_compliment(const std::string& comment, Backend& backend, const PromptBundle& bundle,
                       const PipelineOptions& opts);

// --- pure metric stages ------------------------------------------------------

bool decide_match(Relatedness r, Specificity s, Relatedness min_r = Relatedness::medium,
                  Specificity min_s = Specificity::same);

// Edges passing decide_match at the given thresholds.
std::vector<AlignmentEdge> matched_edges(const std::vector<AlignmentEdge>& scored,
                                         Relatedness min_r = Relatedness::medium,
                                         Specificity min_s = Specificity::same);

// (|{g : some edge (g, .)}|, |{r : some edge (., r)}|). Throws
// std::out_of_range on an out-of-range edge index.
std::pair<int, int> directional_counts(const std::vector<AlignmentEdge>& edges, int n_gen,
                                       int n_real);

// recall = right/n_real, precision = left/n_gen,
// pseudo-Jaccard = mean directional intersection over the union analogue;
// any zero denominator yields 0.
MetricsReport compute_metrics(const std::vector<AlignmentEdge>& edges, int n_gen, int n_real);

struct MacroReport {
    double recall = 0.0;
    double precision = 0.0;
    double jaccard = 0.0;
    double mean_n_gen = 0.0;
    double mean_n_real = 0.0;
    int n_reports = 0;
};

// Unweighted mean over all (generated review, real review) reports.
// Throws EmptyInputError on an empty list.
MacroReport macro_average(const std::vector<MetricsReport>& reports);

// --- scorer abstraction -----------------------------------------------------

// Produces scored candidate pairs for one (generated, real) review pair.
class PairScorer {
public:
    virtual ~PairScorer() = default;
    virtual std::vector<AlignmentEdge> score(const CommentSet& gen, const CommentSet& real) = 0;
};

// The live pipeline: many-many candidates, then one pairwise call each.
class BackendPairScorer : public PairScorer {
public:
    BackendPairScorer(Backend& backend, const PromptBundle& bundle, const PipelineOptions& opts,
                      ManyManyParams params = {});
    std::vector<AlignmentEdge> score(const CommentSet& gen, const CommentSet& real) override;

private:
    Backend& backend_;
    const PromptBundle& bundle_;
    PipelineOptions opts_;
    ManyManyParams params_;
};

// Table of pre-scored pairs keyed by exact comment texts; pairs absent from
// the table are not candidates.
class TablePairScorer : public PairScorer {
public:
    void add(const std::string& gen_text, const std::string& real_text, Relatedness r,
             Specificity s, int votes = 5);
    std::vector<AlignmentEdge> score(const CommentSet& gen, const CommentSet& real) override;

private:
    struct Entry {
        std::string gen_text;
        std::string real_text;
        Relatedness relatedness;
        Specificity specificity;
        int votes;
    };
    std::vector<Entry> entries_;
};

// --- aggregation over a corpus ----------------------------------------------

struct ScoredReviewPair {
    std::string paper_id;
    std::string method_label;
    std::string gen_review_id;
    std::string real_review_id;
    int n_gen = 0;
    int n_real = 0;
    std::vector<AlignmentEdge> scored;
};

struct SweepGrid {
    std::vector<Relatedness> relatedness_levels;  // rows
    std::vector<Specificity> specificity_levels;  // cols
    std::vector<std::vector<double>> recall;      // [row][col], macro-averaged
};

// Recomputes matches per (min relatedness, min specificity) cell from the
// already-scored pairs; no backend calls.
SweepGrid threshold_sweep(const std::vector<ScoredReviewPair>& pairs);

struct PaperRealSets {
    std::string paper_id;
    std::vector<CommentSet> reviews;
};

// Leave-one-out human agreement: each review is scored as "generated"
// against the pooled comments of the other reviews of the same paper.
// Papers with fewer than two reviews are skipped.
MacroReport human_baseline(const std::vector<PaperRealSets>& papers, PairScorer& scorer);

// --- report serialization -----------------------------------------------------

struct EvalReportRow {
    std::string paper_id;
    std::string method_label;
    std::string gen_review_id;
    std::string real_review_id;
    MetricsReport metrics;
};

struct EvalReport {
    std::vector<EvalReportRow> rows;
    MacroReport macro;
};

std::string eval_report_to_json(const EvalReport& report);
std::string eval_report_to_csv(const EvalReport& report);
std::string sweep_to_json(const SweepGrid& grid);
std::string sweep_to_csv(const SweepGrid& grid);

}  // namespace marg
