#include "run_config.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include <marg/errors.hpp>

namespace marg::cli {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

int to_int(const std::string& key, const std::string& v) {
    try {
        return std::stoi(v);
    } catch (const std::exception&) {
        throw SchemaError("config key '" + key + "' expects an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw SchemaError("config key '" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open config file: " + path);

    RunConfig cfg = std::move(base);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw SchemaError("config line " + std::to_string(line_no) +
                              " is not 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));

        if (key == "backend") cfg.backend = value;
        else if (key == "script") cfg.script_path = value;
        else if (key == "model_id") cfg.model_id = value;
        else if (key == "base_url") cfg.base_url = value;
        else if (key == "api_key_env") cfg.api_key_env = value;
        else if (key == "chunk_budget") cfg.chunk_budget = to_int(key, value);
        else if (key == "input_token_limit") cfg.input_token_limit = to_int(key, value);
        else if (key == "max_leader_turns") cfg.max_leader_turns = to_int(key, value);
        else if (key == "worker_tail_limit") cfg.worker_tail_limit = to_int(key, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
        else if (key == "concurrency") cfg.concurrency = to_int(key, value);
        else if (key == "output_dir") cfg.output_dir = value;
        else if (key == "prompt_bundle") cfg.prompt_bundle_path = value;
        else if (key == "temperature") cfg.temperature = std::stod(value);
        else if (key == "max_output_tokens") cfg.max_output_tokens = to_int(key, value);
        else if (key == "no_refinement") cfg.no_refinement = to_bool(key, value);
        else if (key == "lizca_truncation_budget") cfg.lizca_truncation_budget = to_int(key, value);
        else if (key == "lizca_include_captions") cfg.lizca_include_captions = to_bool(key, value);
        else throw SchemaError("unknown config key '" + key + "'");
    }
    return cfg;
}

}  // namespace marg::cli
