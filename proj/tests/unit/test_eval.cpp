#include <doctest.h>

#include <random>
#include <set>

#include <marg/errors.hpp>
#include <marg/eval.hpp>
#include <marg/scripted_backend.hpp>

#include "test_util.hpp"

using namespace marg;
using marg::test::exchange;

namespace {

PipelineOptions default_opts() {
    PipelineOptions opts;
    opts.paper_id = "p1";
    return opts;
}

AlignmentEdge match_edge(int g, int r) {
    return {g, r, Relatedness::high, Specificity::more, 5};
}

// Brute-force oracle: materialize the directional intersection sets
// explicitly, then apply the metric formulas.
MetricsReport oracle_metrics(const std::vector<AlignmentEdge>& edges, int n_gen, int n_real) {
    std::set<int> left;
    std::set<int> right;
    for (int g = 0; g < n_gen; ++g) {
        for (const auto& e : edges) {
            if (e.gen_index == g) left.insert(g);
        }
    }
    for (int r = 0; r < n_real; ++r) {
        for (const auto& e : edges) {
            if (e.real_index == r) right.insert(r);
        }
    }
    MetricsReport m;
    m.n_gen = n_gen;
    m.n_real = n_real;
    m.n_left_aligned = static_cast<int>(left.size());
    m.n_right_aligned = static_cast<int>(right.size());
    m.recall = n_real > 0 ? static_cast<double>(m.n_right_aligned) / n_real : 0.0;
    m.precision = n_gen > 0 ? static_cast<double>(m.n_left_aligned) / n_gen : 0.0;
    const double intersection = (m.n_left_aligned + m.n_right_aligned) / 2.0;
    const double denom = n_gen + n_real - intersection;
    m.jaccard = denom > 0 ? intersection / denom : 0.0;
    return m;
}

}  // namespace

TEST_CASE("comment sets: exact-string dedup keeps first occurrences") {
    const auto set = CommentSet::make(CommentSet::Owner::real, "r1", {"a", "b", "a", "c", "b"});
    REQUIRE(set.comments.size() == 3);
    CHECK(set.comments[0] == "a");
    CHECK(set.comments[2] == "c");
}

TEST_CASE("decide_match: default thresholds") {
    CHECK(decide_match(Relatedness::high, Specificity::more));
    CHECK(decide_match(Relatedness::medium, Specificity::same));
    CHECK_FALSE(decide_match(Relatedness::weak, Specificity::more));
    CHECK_FALSE(decide_match(Relatedness::medium, Specificity::less));
}

TEST_CASE("directional_counts: explicit edge sets") {
    const std::vector<AlignmentEdge> edges = {match_edge(0, 0), match_edge(1, 0)};
    const auto [left, right] = directional_counts(edges, 3, 2);
    CHECK(left == 2);
    CHECK(right == 1);
    CHECK(directional_counts({}, 3, 2) == std::pair<int, int>{0, 0});

    std::vector<AlignmentEdge> complete;
    for (int g = 0; g < 3; ++g) {
        for (int r = 0; r < 2; ++r) complete.push_back(match_edge(g, r));
    }
    CHECK(directional_counts(complete, 3, 2) == std::pair<int, int>{3, 2});
    CHECK_THROWS_AS(directional_counts({match_edge(5, 0)}, 3, 2), std::out_of_range);
}

TEST_CASE("compute_metrics: hand-checked fixture") {
    const auto m = compute_metrics({match_edge(0, 0), match_edge(1, 0)}, 3, 2);
    CHECK(m.recall == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.jaccard == doctest::Approx(1.5 / 3.5).epsilon(1e-12));
}

TEST_CASE("compute_metrics: conventions and identity") {
    const auto zero = compute_metrics({}, 3, 2);
    CHECK(zero.recall == 0.0);
    CHECK(zero.precision == 0.0);
    CHECK(zero.jaccard == 0.0);
    CHECK(compute_metrics({}, 0, 0).jaccard == 0.0);

    std::vector<AlignmentEdge> diag;
    for (int i = 0; i < 4; ++i) diag.push_back(match_edge(i, i));
    const auto perfect = compute_metrics(diag, 4, 4);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.jaccard == 1.0);
}

TEST_CASE("compute_metrics: equals the set-materializing oracle on random instances") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const int n_gen = static_cast<int>(rng() % 13);
        const int n_real = static_cast<int>(rng() % 13);
        std::vector<AlignmentEdge> edges;
        if (n_gen > 0 && n_real > 0) {
            const int n_edges = static_cast<int>(rng() % 20);
            for (int i = 0; i < n_edges; ++i) {
                edges.push_back(match_edge(static_cast<int>(rng() % n_gen),
                                           static_cast<int>(rng() % n_real)));
            }
        }
        const auto fast = compute_metrics(edges, n_gen, n_real);
        const auto slow = oracle_metrics(edges, n_gen, n_real);
        CHECK(fast.recall == slow.recall);
        CHECK(fast.precision == slow.precision);
        CHECK(fast.jaccard == slow.jaccard);
        CHECK(fast.n_left_aligned == slow.n_left_aligned);
        CHECK(fast.n_right_aligned == slow.n_right_aligned);
        CHECK(fast.recall >= 0.0);
        CHECK(fast.recall <= 1.0);
        CHECK(fast.jaccard >= 0.0);
        CHECK(fast.jaccard <= 1.0);
    }
}

TEST_CASE("compute_metrics: swapping operands swaps recall/precision, keeps jaccard") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const int n_gen = 1 + static_cast<int>(rng() % 10);
        const int n_real = 1 + static_cast<int>(rng() % 10);
        std::vector<AlignmentEdge> edges;
        std::vector<AlignmentEdge> swapped;
        const int n_edges = static_cast<int>(rng() % 15);
        for (int i = 0; i < n_edges; ++i) {
            const int g = static_cast<int>(rng() % n_gen);
            const int r = static_cast<int>(rng() % n_real);
            edges.push_back(match_edge(g, r));
            swapped.push_back(match_edge(r, g));
        }
        const auto fwd = compute_metrics(edges, n_gen, n_real);
        const auto rev = compute_metrics(swapped, n_real, n_gen);
        CHECK(fwd.recall == rev.precision);
        CHECK(fwd.precision == rev.recall);
        CHECK(fwd.jaccard == rev.jaccard);
    }
}

TEST_CASE("macro_average: arithmetic means and empty input error") {
    MetricsReport a;
    a.recall = 0.2;
    a.n_gen = 4;
    a.n_real = 2;
    MetricsReport b;
    b.recall = 0.4;
    b.n_gen = 8;
    b.n_real = 4;
    const auto macro = macro_average({a, b});
    CHECK(macro.recall == doctest::Approx(0.3));
    CHECK(macro.mean_n_gen == doctest::Approx(6.0));
    CHECK(macro.n_reports == 2);

    const auto single = macro_average({a});
    CHECK(single.recall == doctest::Approx(a.recall));

    CHECK_THROWS_AS(macro_average({}), EmptyInputError);
}

TEST_CASE("macro_average: flat mean over the full review cross product") {
    // Three papers, one generated review each, two real reviews per paper:
    // six (generated, real) reports averaged with equal weight.
    std::vector<MetricsReport> reports;
    const double recalls[] = {1.0, 0.5, 0.25, 0.75, 0.0, 0.5};
    for (double r : recalls) {
        MetricsReport m;
        m.recall = r;
        reports.push_back(m);
    }
    const auto macro = macro_average(reports);
    CHECK(macro.n_reports == 6);
    CHECK(macro.recall == doctest::Approx(3.0 / 6.0));
}

TEST_CASE("many_many_match: vote threshold keeps pairs seen at least twice") {
    const auto bundle = PromptBundle::defaults();
    const auto gen = CommentSet::make(CommentSet::Owner::generated, "g", {"G1", "G2", "G3"});
    const auto real = CommentSet::make(CommentSet::Owner::real, "r", {"R1", "R2", "R3"});

    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "Identify every pair",
                 R"([{"generated": "G1", "real": "R1"}, {"generated": "G2", "real": "R2"},
                     {"generated": "G3", "real": "R3"}])",
                 1),
        exchange("", "Identify every pair",
                 R"([{"generated": "G2", "real": "R2"}, {"generated": "G3", "real": "R3"}])", 1),
        exchange("", "Identify every pair", R"([{"generated": "G3", "real": "R3"}])", 3),
    };
    ScriptedBackend backend(script);
    const auto candidates = many_many_match(gen, real, backend, bundle, default_opts(), {});
    REQUIRE(candidates.size() == 2);
    CHECK(candidates[0].gen_index == 1);
    CHECK(candidates[0].real_index == 1);
    CHECK(candidates[0].votes == 2);
    CHECK(candidates[1].gen_index == 2);
    CHECK(candidates[1].votes == 5);
    CHECK(backend.ledger().size() == 5);  // five passes
}

TEST_CASE("many_many_match: empty sets make no backend calls") {
    const auto bundle = PromptBundle::defaults();
    Script script;
    script.strict = true;
    ScriptedBackend backend(script);
    const auto gen = CommentSet::make(CommentSet::Owner::generated, "g", {});
    const auto real = CommentSet::make(CommentSet::Owner::real, "r", {"R1"});
    CHECK(many_many_match(gen, real, backend, bundle, default_opts(), {}).empty());
    CHECK(backend.ledger().size() == 0);
}

TEST_CASE("many_many_match: unparseable pass contributes no votes") {
    const auto bundle = PromptBundle::defaults();
    const auto gen = CommentSet::make(CommentSet::Owner::generated, "g", {"G1"});
    const auto real = CommentSet::make(CommentSet::Owner::real, "r", {"R1"});
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "Identify every pair", "I could not find any structured matches.", 1),
        exchange("", "Identify every pair", R"([{"generated": "G1", "real": "R1"}])", 4),
    };
    ScriptedBackend backend(script);
    const auto candidates = many_many_match(gen, real, backend, bundle, default_opts(), {});
    REQUIRE(candidates.size() == 1);
    CHECK(candidates[0].votes == 4);
}

TEST_CASE("many_many_match: deterministic for a fixed seed") {
    const auto bundle = PromptBundle::defaults();
    const auto gen =
        CommentSet::make(CommentSet::Owner::generated, "g", {"G1", "G2", "G3", "G4"});
    const auto real = CommentSet::make(CommentSet::Owner::real, "r", {"R1", "R2"});
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "Identify every pair", R"([{"generated": "G2", "real": "R2"}])"),
    };
    ManyManyParams params;
    params.seed = 1234;

    ScriptedBackend b1(script);
    marg::test::RecordingBackend r1(b1);
    const auto c1 = many_many_match(gen, real, r1, bundle, default_opts(), params);
    ScriptedBackend b2(script);
    marg::test::RecordingBackend r2(b2);
    const auto c2 = many_many_match(gen, real, r2, bundle, default_opts(), params);

    REQUIRE(c1.size() == c2.size());
    REQUIRE(r1.requests.size() == r2.requests.size());
    for (size_t i = 0; i < r1.requests.size(); ++i) {
        CHECK(r1.requests[i].messages.back().content == r2.requests[i].messages.back().content);
    }

    // Permutations actually vary across passes.
    std::set<std::string> prompts;
    for (const auto& req : r1.requests) prompts.insert(req.messages.back().content);
    CHECK(prompts.size() > 1);
}

TEST_CASE("pairwise_score: parses labels from JSON replies") {
    const auto bundle = PromptBundle::defaults();
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "relatedness", R"({"relatedness": "high", "specificity": "more"})", 1),
        exchange("", "relatedness", R"({"relatedness": "medium", "specificity": "more"})", 1),
        exchange("", "relatedness", "complete nonsense", 1),
        exchange("", "relatedness",
                 "The pair has weak relatedness; the generated comment is the same "
                 "specificity.",
                 1),
    };
    ScriptedBackend backend(script);
    CHECK(pairwise_score("g", "r", backend, bundle, default_opts()) ==
          std::pair{Relatedness::high, Specificity::more});
    CHECK(pairwise_score("g", "r", backend, bundle, default_opts()) ==
          std::pair{Relatedness::medium, Specificity::more});
    CHECK(pairwise_score("g", "r", backend, bundle, default_opts()) ==
          std::pair{Relatedness::none, Specificity::less});
    CHECK(pairwise_score("g", "r", backend, bundle, default_opts()) ==
          std::pair{Relatedness::weak, Specificity::same});
}

TEST_CASE("extract_comments: pass-through of the parsed list") {
    const auto bundle = PromptBundle::defaults();
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "Extract the actionable feedback", "1. E1.\n2. E2.\n3. E3.\n4. E4.", 1),
        exchange("", "Extract the actionable feedback", "", 1),
    };
    ScriptedBackend backend(script);
    const auto set = extract_comments("review text", "r1", backend, bundle, default_opts());
    CHECK(set.comments.size() == 4);
    CHECK(set.review_id == "r1");
    CHECK(set.owner == CommentSet::Owner::real);

    const auto praise_only =
        extract_comments("Great paper!", "r2", backend, bundle, default_opts());
    CHECK(praise_only.comments.empty());
}

TEST_CASE("detect_compliment: JSON field read with conservative fallback") {
    const auto bundle = PromptBundle::defaults();
    Script script;
    script.strict = true;
    script.exchanges = {
        exchange("", "has_compliment", R"({"has_compliment": true})", 1),
        exchange("", "has_compliment", R"({"has_compliment": false})", 1),
        exchange("", "has_compliment", "maybe?", 1),
    };
    ScriptedBackend backend(script);
    CHECK(detect_compliment("Nice work on X; please add Y.", backend, bundle, default_opts()));
    CHECK_FALSE(detect_compliment("Add Y.", backend, bundle, default_opts()));
    CHECK_FALSE(detect_compliment("Add Z.", backend, bundle, default_opts()));
}

namespace {

std::vector<ScoredReviewPair> sweep_fixture() {
    // Two review pairs with a spread of scores across both score axes.
    ScoredReviewPair a;
    a.paper_id = "p1";
    a.gen_review_id = "m";
    a.real_review_id = "r1";
    a.n_gen = 3;
    a.n_real = 3;
    a.scored = {
        {0, 0, Relatedness::high, Specificity::more, 5},
        {1, 1, Relatedness::medium, Specificity::same, 3},
        {2, 2, Relatedness::weak, Specificity::less, 2},
    };
    ScoredReviewPair b;
    b.paper_id = "p2";
    b.gen_review_id = "m";
    b.real_review_id = "r1";
    b.n_gen = 2;
    b.n_real = 4;
    b.scored = {
        {0, 0, Relatedness::medium, Specificity::more, 2},
        {1, 1, Relatedness::high, Specificity::less, 4},
        {1, 2, Relatedness::none, Specificity::same, 2},
    };
    return {a, b};
}

}  // namespace

TEST_CASE("threshold_sweep: default cell matches the default pipeline, monotone grid") {
    const auto pairs = sweep_fixture();
    const auto grid = threshold_sweep(pairs);
    REQUIRE(grid.recall.size() == 4);
    REQUIRE(grid.recall[0].size() == 3);

    std::vector<MetricsReport> default_reports;
    for (const auto& p : pairs) {
        default_reports.push_back(compute_metrics(matched_edges(p.scored), p.n_gen, p.n_real));
    }
    const double default_recall = macro_average(default_reports).recall;
    CHECK(grid.recall[2][1] == default_recall);  // (medium, same)

    for (size_t i = 0; i < 4; ++i) {
        for (size_t j = 0; j < 3; ++j) {
            if (i + 1 < 4) CHECK(grid.recall[i][j] >= grid.recall[i + 1][j]);
            if (j + 1 < 3) CHECK(grid.recall[i][j] >= grid.recall[i][j + 1]);
        }
    }
    CHECK(grid.recall[0][0] >= grid.recall[3][2]);  // weakest >= strictest
}

TEST_CASE("human_baseline: identical reviews give full recall") {
    TablePairScorer scorer;
    scorer.add("a", "a", Relatedness::high, Specificity::same);
    scorer.add("b", "b", Relatedness::high, Specificity::same);

    PaperRealSets paper;
    paper.paper_id = "p1";
    paper.reviews = {CommentSet::make(CommentSet::Owner::real, "r1", {"a", "b"}),
                     CommentSet::make(CommentSet::Owner::real, "r2", {"a", "b"})};
    const auto macro = human_baseline({paper}, scorer);
    CHECK(macro.recall == doctest::Approx(1.0));
    CHECK(macro.precision == doctest::Approx(1.0));
    CHECK(macro.n_reports == 2);
}

TEST_CASE("human_baseline: papers with one review are skipped") {
    TablePairScorer scorer;
    PaperRealSets lonely;
    lonely.paper_id = "solo";
    lonely.reviews = {CommentSet::make(CommentSet::Owner::real, "r1", {"a"})};

    PaperRealSets full;
    full.paper_id = "pair";
    full.reviews = {CommentSet::make(CommentSet::Owner::real, "r1", {"a"}),
                    CommentSet::make(CommentSet::Owner::real, "r2", {"b"})};
    const auto macro = human_baseline({lonely, full}, scorer);
    CHECK(macro.n_reports == 2);  // only the two leave-one-out rows of "pair"

    CHECK_THROWS_AS(human_baseline({lonely}, scorer), EmptyInputError);
}

TEST_CASE("human_baseline: three reviews mean over three leave-one-out reports") {
    TablePairScorer scorer;
    // r1's comment matches r2's; nothing else matches.
    scorer.add("x", "y", Relatedness::high, Specificity::same);
    scorer.add("y", "x", Relatedness::high, Specificity::same);

    PaperRealSets paper;
    paper.paper_id = "p";
    paper.reviews = {CommentSet::make(CommentSet::Owner::real, "r1", {"x"}),
                     CommentSet::make(CommentSet::Owner::real, "r2", {"y"}),
                     CommentSet::make(CommentSet::Owner::real, "r3", {"z"})};
    const auto macro = human_baseline({paper}, scorer);
    CHECK(macro.n_reports == 3);
    // i=1: gen {x} vs pooled {y,z}: recall 1/2, precision 1.
    // i=2: gen {y} vs pooled {x,z}: recall 1/2, precision 1.
    // i=3: gen {z} vs pooled {x,y}: recall 0, precision 0.
    CHECK(macro.recall == doctest::Approx((0.5 + 0.5 + 0.0) / 3.0));
    CHECK(macro.precision == doctest::Approx((1.0 + 1.0 + 0.0) / 3.0));
}

TEST_CASE("report serialization: json and csv round out") {
    EvalReport report;
    EvalReportRow row;
    row.paper_id = "p1";
    row.method_label = "MARG-S";
    row.gen_review_id = "MARG-S";
    row.real_review_id = "r1";
    row.metrics = compute_metrics({match_edge(0, 0), match_edge(1, 0)}, 3, 2);
    report.rows = {row};
    report.macro = macro_average({row.metrics});

    const std::string json_text = eval_report_to_json(report);
    CHECK(json_text.find("\"recall\": 0.5") != std::string::npos);
    const std::string csv = eval_report_to_csv(report);
    CHECK(csv.find("p1,MARG-S,MARG-S,r1,0.500000") != std::string::npos);

    const auto grid = threshold_sweep(sweep_fixture());
    const std::string sweep_csv = sweep_to_csv(grid);
    CHECK(sweep_csv.find("relatedness,less,same,more") != std::string::npos);
    CHECK(sweep_to_json(grid).find("\"relatedness_levels\"") != std::string::npos);
}
