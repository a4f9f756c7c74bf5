#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_config.hpp"

namespace {

using marg::cli::RunConfig;

// Applies --config first, then individual flags on top.
void add_config_flags(CLI::App* cmd, RunConfig& config, std::string& config_path) {
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--backend", config.backend, "live | scripted");
    cmd->add_option("--script", config.script_path, "script file for the scripted backend");
    cmd->add_option("--model", config.model_id, "chat model id");
    cmd->add_option("--base-url", config.base_url, "chat-completions base URL");
    cmd->add_option("--budget", config.chunk_budget, "chunk token budget");
    cmd->add_option("--input-limit", config.input_token_limit, "backend input token limit");
    cmd->add_option("--max-turns", config.max_leader_turns, "leader turn cap per group");
    cmd->add_option("--seed", config.seed, "seed for permutation stages");
    cmd->add_option("--prompts", config.prompt_bundle_path, "prompt bundle overrides (JSON)");
    cmd->add_flag("--serial", [&config](std::int64_t) { config.concurrency = 1; },
                  "one backend request at a time");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent review generation and alignment evaluation"};
    app.require_subcommand(1);

    // The config file is a base layer; explicit flags override it, so load
    // it before CLI11 fills in flag values.
    RunConfig base_config;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                base_config = marg::cli::load_config_file(argv[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return marg::cli::kExitFatal;
            }
            break;
        }
    }

    marg::cli::ReviewArgs review;
    review.config = base_config;
    std::string review_config_path;
    auto* review_cmd = app.add_subcommand("review", "Generate a review for a paper");
    review_cmd->add_option("paper", review.paper_path, "structured paper JSON")->required();
    review_cmd->add_option("--method", review.method, "sarg-b | sarg-tp | marg-tp | marg-s | lizca")
        ->required();
    review_cmd->add_option("--out", review.config.output_dir, "output directory");
    review_cmd->add_flag("--no-refinement", review.config.no_refinement,
                         "skip the refinement stage");
    add_config_flags(review_cmd, review.config, review_config_path);

    marg::cli::EvaluateArgs evaluate;
    evaluate.config = base_config;
    std::string eval_config_path;
    std::string scores_path;
    auto* eval_cmd = app.add_subcommand("evaluate", "Align generated reviews with real ones");
    eval_cmd->add_option("reviews_dir", evaluate.reviews_dir, "directory of generated reviews")
        ->required();
    eval_cmd->add_option("real_dir", evaluate.real_reviews_dir, "directory of real reviews")
        ->required();
    eval_cmd->add_option("--out", evaluate.out_dir, "report output directory");
    eval_cmd->add_option("--scores", scores_path, "pre-scored pairs file (skips the backend)");
    eval_cmd->add_flag("--sweep", evaluate.sweep, "also write the threshold-sweep grid");
    eval_cmd->add_flag("--human-baseline", evaluate.human_baseline,
                       "also score real reviews against each other (leave-one-out)");
    add_config_flags(eval_cmd, evaluate.config, eval_config_path);

    marg::cli::CostArgs cost;
    std::string cost_json_out;
    auto* cost_cmd = app.add_subcommand("cost", "Aggregate usage ledgers into a cost table");
    cost_cmd->add_option("paths", cost.paths, "usage.json files or directories");
    cost_cmd->add_option("--json", cost_json_out, "also write the table as JSON");

    marg::cli::TraceArgs trace;
    std::string trace_filter;
    auto* trace_cmd = app.add_subcommand("trace", "Render a group transcript");
    trace_cmd->add_option("transcript", trace.transcript_path, "transcript .jsonl file")
        ->required();
    trace_cmd->add_option("--filter", trace_filter, "only events carrying this tag");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return marg::cli::kExitUsage;
    }

    try {
        if (review_cmd->parsed()) {
            // Scripted backend is implied by --script.
            if (!review.config.script_path.empty()) review.config.backend = "scripted";
            return marg::cli::cmd_review(review);
        }
        if (eval_cmd->parsed()) {
            if (!scores_path.empty()) evaluate.scores_path = scores_path;
            if (!evaluate.config.script_path.empty()) evaluate.config.backend = "scripted";
            return marg::cli::cmd_evaluate(evaluate);
        }
        if (cost_cmd->parsed()) {
            if (!cost_json_out.empty()) cost.json_out = cost_json_out;
            return marg::cli::cmd_cost(cost);
        }
        if (trace_cmd->parsed()) {
            if (!trace_filter.empty()) trace.filter_tag = trace_filter;
            return marg::cli::cmd_trace(trace);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return marg::cli::kExitFatal;
    }
    return marg::cli::kExitUsage;
}
