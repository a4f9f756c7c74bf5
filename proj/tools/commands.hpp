#pragma once

#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace marg::cli {

// Exit codes shared by all subcommands.
constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;
constexpr int kExitUsage = 64;

struct ReviewArgs {
    std::string paper_path;
    std::string method;  // sarg-b | sarg-tp | marg-tp | marg-s | lizca
    RunConfig config;
};

struct EvaluateArgs {
    std::string reviews_dir;
    std::string real_reviews_dir;
    std::string out_dir = "eval_out";
    std::optional<std::string> scores_path;  // pre-scored pairs, skips the backend
    bool sweep = false;
    bool human_baseline = false;  // leave-one-out agreement among real reviews
    RunConfig config;
};

struct CostArgs {
    std::vector<std::string> paths;  // usage.json files or directories
    std::optional<std::string> json_out;
};

struct TraceArgs {
    std::string transcript_path;
    std::optional<std::string> filter_tag;
};

int cmd_review(const ReviewArgs& args);
int cmd_evaluate(const EvaluateArgs& args);
int cmd_cost(const CostArgs& args);
int cmd_trace(const TraceArgs& args);

}  // namespace marg::cli
