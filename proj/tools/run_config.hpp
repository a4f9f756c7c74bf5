#pragma once

#include <optional>
#include <string>

namespace marg::cli {

// Operator configuration, mirrored by the key = value config file and
// overridable by command-line flags.
struct RunConfig {
    std::string backend = "live";  // or "scripted"
    std::string script_path;
    std::string model_id = "gpt-4-0613";
    std::string base_url = "https://api.openai.com";
    std::string api_key_env = "MARG_API_KEY";
    int chunk_budget = 4096;
    int input_token_limit = 8192;
    int max_leader_turns = 40;
    int worker_tail_limit = 3;
    std::uint64_t seed = 0;
    int concurrency = 4;
    std::string output_dir = "out";
    std::string prompt_bundle_path;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    bool no_refinement = false;
    std::optional<int> lizca_truncation_budget;
    bool lizca_include_captions = true;
};

// Parses a small key = value file: one pair per line, '#' comments, values
// optionally double-quoted. Unknown keys are an error.
RunConfig load_config_file(const std::string& path, RunConfig base = {});

}  // namespace marg::cli
