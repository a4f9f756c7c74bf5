#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include <marg/agent_group.hpp>
#include <marg/corpus.hpp>
#include <marg/eval.hpp>
#include <marg/prompts.hpp>
#include <marg/scripted_backend.hpp>
#include <marg/tokens.hpp>

namespace {

std::string prose(int n_words) {
    static const char* vocab[] = {"document", "segment",  "protocol", "message", "review",
                                  "budget",   "boundary", "analysis", "summary", "response"};
    std::string out;
    std::mt19937_64 rng(17);
    for (int i = 0; i < n_words; ++i) {
        if (i > 0) out += ' ';
        out += vocab[rng() % 10];
        if (i % 13 == 12) out += '.';
    }
    return out;
}

marg::StructuredPaper synthetic_paper(int n_paragraphs, int words_per_paragraph) {
    marg::StructuredPaper paper;
    paper.title = "Synthetic";
    marg::Section sec;
    sec.name = "Body";
    for (int i = 0; i < n_paragraphs; ++i) sec.paragraphs.push_back(prose(words_per_paragraph));
    paper.sections.push_back(std::move(sec));
    return paper;
}

void BM_CountTokens(benchmark::State& state) {
    const std::string text = prose(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(marg::count_tokens(text));
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_CountTokens)->Arg(1000)->Arg(100000);

void BM_Chunk(benchmark::State& state) {
    const auto paper = synthetic_paper(static_cast<int>(state.range(0)), 400);
    const auto annotated = marg::annotate(paper);
    for (auto _ : state) {
        benchmark::DoNotOptimize(marg::chunk(annotated, marg::kDefaultChunkBudget));
    }
}
BENCHMARK(BM_Chunk)->Arg(50)->Arg(500);

void BM_ComputeMetrics(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::vector<marg::AlignmentEdge> edges;
    const int n = static_cast<int>(state.range(0));
    for (int i = 0; i < n; ++i) {
        edges.push_back({static_cast<int>(rng() % 40), static_cast<int>(rng() % 40),
                         marg::Relatedness::high, marg::Specificity::more, 5});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(marg::compute_metrics(edges, 40, 40));
    }
}
BENCHMARK(BM_ComputeMetrics)->Arg(16)->Arg(256);

void BM_BroadcastRound(benchmark::State& state) {
    const auto bundle = marg::PromptBundle::defaults();
    marg::Script script;
    script.exchanges.push_back({std::nullopt, std::string("Write \"Ready\""), std::nullopt,
                                "Ready", std::nullopt});
    script.exchanges.push_back({std::nullopt, std::string("Message from Agent 0"), std::nullopt,
                                "Acknowledged; no issues found in my chunk.", std::nullopt});

    const auto paper = synthetic_paper(static_cast<int>(state.range(0)), 300);
    const auto chunks = marg::chunk(marg::annotate(paper), 512);

    for (auto _ : state) {
        state.PauseTiming();
        marg::ScriptedBackend backend(script);
        marg::GroupConfig cfg;
        cfg.chunks = chunks;
        cfg.leader_system_prompt = bundle.get("marg_s.leader_system");
        cfg.worker_system_prompt = bundle.get("marg_s.worker_system");
        cfg.worker_chunk_template = bundle.get("marg_s.worker_chunk");
        cfg.agent_info_template = bundle.get("protocol.agent_info");
        cfg.protocol = marg::ProtocolTexts::from_bundle(bundle);
        cfg.group_label = "bench";
        marg::AgentGroup group(std::move(cfg), backend, {});
        group.init();
        state.ResumeTiming();
        benchmark::DoNotOptimize(group.broadcast_round("Summarize your chunk in one line."));
    }
}
BENCHMARK(BM_BroadcastRound)->Arg(4)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
