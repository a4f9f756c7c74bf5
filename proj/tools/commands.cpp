#include "commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include <marg/baselines.hpp>
#include <marg/corpus.hpp>
#include <marg/errors.hpp>
#include <marg/eval.hpp>
#include <marg/http_backend.hpp>
#include <marg/pipeline.hpp>
#include <marg/review.hpp>
#include <marg/scripted_backend.hpp>
#include <marg/transcript.hpp>

namespace marg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string paper_id_from_path(const std::string& path) {
    return fs::path(path).stem().string();
}

std::unique_ptr<Backend> make_backend(const RunConfig& config) {
    if (config.backend == "scripted") {
        if (config.script_path.empty()) {
            throw std::invalid_argument("scripted backend requires --script");
        }
        return std::make_unique<ScriptedBackend>(load_script(config.script_path),
                                                 config.input_token_limit);
    }
    if (config.backend != "live") {
        throw std::invalid_argument("unknown backend '" + config.backend +
                                    "' (expected live or scripted)");
    }
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') key = std::getenv("OPENAI_API_KEY");
    if (key == nullptr || *key == '\0') {
        throw std::invalid_argument("live backend requires an API key in $" +
                                    config.api_key_env + " (or $OPENAI_API_KEY)");
    }
    HttpBackendConfig http;
    http.base_url = config.base_url;
    http.api_key = key;
    http.input_token_limit = config.input_token_limit;
    return std::make_unique<HttpBackend>(http);
}

PromptBundle make_bundle(const RunConfig& config) {
    if (config.prompt_bundle_path.empty()) return PromptBundle::defaults();
    return PromptBundle::load(config.prompt_bundle_path);
}

PipelineOptions make_options(const RunConfig& config, const std::string& paper_id) {
    PipelineOptions opts;
    opts.paper_id = paper_id;
    opts.model_id = config.model_id;
    opts.sampling.temperature = config.temperature;
    opts.sampling.max_output_tokens = config.max_output_tokens;
    opts.limits.max_leader_turns = config.max_leader_turns;
    opts.limits.worker_tail_limit = config.worker_tail_limit;
    opts.limits.input_token_limit = config.input_token_limit;
    // Replays stay byte-identical when generation order is fixed; parallel
    // requests buy nothing against an in-memory script anyway.
    opts.concurrency = config.backend == "scripted" ? 1 : config.concurrency;
    opts.refinement = !config.no_refinement;
    opts.lizca_truncation_budget = config.lizca_truncation_budget;
    opts.lizca_include_captions = config.lizca_include_captions;
    return opts;
}

std::string usage_to_json(const std::vector<UsageEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries) {
        arr.push_back({{"method_label", e.method_label},
                       {"paper_id", e.paper_id},
                       {"input_tokens", e.input_tokens},
                       {"generated_tokens", e.generated_tokens}});
    }
    json doc;
    doc["schema_version"] = 1;
    doc["entries"] = std::move(arr);
    return doc.dump(2) + "\n";
}

std::vector<UsageEntry> usage_from_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("entries") ||
        !doc["entries"].is_array()) {
        throw SchemaError("usage file must be an object with an 'entries' array");
    }
    std::vector<UsageEntry> out;
    for (const auto& e : doc["entries"]) {
        UsageEntry entry;
        entry.method_label = e.value("method_label", std::string());
        entry.paper_id = e.value("paper_id", std::string());
        entry.input_tokens = e.value("input_tokens", 0);
        entry.generated_tokens = e.value("generated_tokens", 0);
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace

int cmd_review(const ReviewArgs& args) {
    static const std::vector<std::string> kMethods = {"sarg-b", "sarg-tp", "marg-tp", "marg-s",
                                                      "lizca"};
    if (std::find(kMethods.begin(), kMethods.end(), args.method) == kMethods.end()) {
        std::cerr << "error: unknown method '" << args.method
                  << "' (expected one of sarg-b, sarg-tp, marg-tp, marg-s, lizca)\n";
        return kExitUsage;
    }

    std::unique_ptr<Backend> backend;
    try {
        backend = make_backend(args.config);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }

    try {
        const PromptBundle bundle = make_bundle(args.config);
        const StructuredPaper paper = ingest_file(args.paper_path);
        const auto paragraphs = annotate(paper);
        const auto chunks = chunk(paragraphs, args.config.chunk_budget);
        const std::string paper_id = paper_id_from_path(args.paper_path);
        const PipelineOptions opts = make_options(args.config, paper_id);

        PipelineResult result;
        if (args.method == "sarg-b") {
            result = sarg_b_review(chunks, *backend, bundle, opts);
        } else if (args.method == "sarg-tp") {
            result = sarg_tp_review(chunks, *backend, bundle, opts);
        } else if (args.method == "marg-tp") {
            result = marg_tp_review(chunks, *backend, bundle, opts);
        } else if (args.method == "marg-s") {
            result = marg_s_review(chunks, *backend, bundle, opts);
        } else {
            result = lizca_review(paper, paragraphs, *backend, bundle, opts);
        }

        const fs::path dir =
            fs::path(args.config.output_dir) / paper_id / result.review.method_label;
        write_file(dir / "review.json", review_to_json(result.review, now_iso8601()));
        for (const auto& transcript : result.transcripts) {
            write_file(dir / ("group-" + transcript.group_label + ".jsonl"),
                       transcript.to_jsonl());
        }
        write_file(dir / "usage.json", usage_to_json(backend->ledger().entries()));

        std::cout << dir.string() << ": " << result.review.comments.size() << " comments";
        if (!result.review.errors.empty()) {
            std::cout << ", " << result.review.errors.size() << " group error(s)";
        }
        std::cout << "\n";
        return result.review.errors.empty() ? kExitOk : kExitPartial;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
}

namespace {

std::vector<fs::path> collect_json_files(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct RealReview {
    std::string paper_id;
    std::string review_id;
    std::optional<std::vector<std::string>> comments;  // pre-extracted
    std::string text;                                  // raw, needs extraction
};

RealReview parse_real_review(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw SchemaError("real review file is not a JSON object");
    RealReview r;
    if (!doc.contains("paper_id") || !doc["paper_id"].is_string())
        throw SchemaError("real review missing string 'paper_id'");
    r.paper_id = doc["paper_id"].get<std::string>();
    r.review_id = doc.value("review_id", std::string("review"));
    if (doc.contains("comments") && doc["comments"].is_array()) {
        std::vector<std::string> comments;
        for (const auto& c : doc["comments"]) {
            if (!c.is_string()) throw SchemaError("real review comments must be strings");
            comments.push_back(c.get<std::string>());
        }
        r.comments = std::move(comments);
    } else if (doc.contains("text") && doc["text"].is_string()) {
        r.text = doc["text"].get<std::string>();
    } else {
        throw SchemaError("real review needs either 'comments' or 'text'");
    }
    return r;
}

TablePairScorer load_scores(const std::string& path) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("pairs") ||
        !doc["pairs"].is_array()) {
        throw SchemaError("scores file must be an object with a 'pairs' array");
    }
    TablePairScorer scorer;
    for (const auto& p : doc["pairs"]) {
        if (!p.is_object() || !p.contains("gen_text") || !p.contains("real_text") ||
            !p.contains("relatedness") || !p.contains("specificity")) {
            throw SchemaError(
                "each scored pair needs gen_text, real_text, relatedness, specificity");
        }
        scorer.add(p["gen_text"].get<std::string>(), p["real_text"].get<std::string>(),
                   relatedness_from_string(p["relatedness"].get<std::string>()),
                   specificity_from_string(p["specificity"].get<std::string>()),
                   p.value("votes", 5));
    }
    return scorer;
}

}  // namespace

int cmd_evaluate(const EvaluateArgs& args) {
    try {
        std::vector<Review> generated;
        for (const auto& path : collect_json_files(args.reviews_dir)) {
            if (path.filename() == "usage.json") continue;
            try {
                generated.push_back(review_from_json(read_file(path)));
            } catch (const SchemaError& e) {
                std::cerr << "[warn] skipping " << path << ": " << e.what() << "\n";
            }
        }

        std::vector<RealReview> real_reviews;
        for (const auto& path : collect_json_files(args.real_reviews_dir)) {
            try {
                real_reviews.push_back(parse_real_review(read_file(path)));
            } catch (const SchemaError& e) {
                std::cerr << "[warn] skipping " << path << ": " << e.what() << "\n";
            }
        }

        const PromptBundle bundle = make_bundle(args.config);

        const bool needs_extraction =
            std::any_of(real_reviews.begin(), real_reviews.end(),
                        [](const RealReview& r) { return !r.comments.has_value(); });
        std::unique_ptr<Backend> backend;
        if (needs_extraction || !args.scores_path) {
            backend = make_backend(args.config);
        }

        // Resolve real comment sets, extracting where only raw text exists.
        std::vector<std::pair<std::string, CommentSet>> real_sets;  // paper_id, set
        for (const auto& r : real_reviews) {
            if (r.comments) {
                real_sets.emplace_back(r.paper_id,
                                       CommentSet::make(CommentSet::Owner::real, r.review_id,
                                                        *r.comments));
            } else {
                PipelineOptions opts = make_options(args.config, r.paper_id);
                real_sets.emplace_back(
                    r.paper_id, extract_comments(r.text, r.review_id, *backend, bundle, opts));
            }
        }

        std::unique_ptr<PairScorer> scorer;
        std::optional<TablePairScorer> table;
        std::optional<BackendPairScorer> live;
        if (args.scores_path) {
            table = load_scores(*args.scores_path);
            scorer = nullptr;
        } else {
            ManyManyParams params;
            params.seed = args.config.seed;
            PipelineOptions opts = make_options(args.config, "");
            live.emplace(*backend, bundle, opts, params);
        }
        PairScorer& pair_scorer =
            table ? static_cast<PairScorer&>(*table) : static_cast<PairScorer&>(*live);

        EvalReport report;
        std::vector<ScoredReviewPair> scored_pairs;
        for (const auto& review : generated) {
            CommentSet gen;
            {
                std::vector<std::string> texts;
                for (const auto& c : review.comments) texts.push_back(c.text);
                gen = CommentSet::make(CommentSet::Owner::generated, review.method_label,
                                       std::move(texts));
            }
            for (const auto& [paper_id, real_set] : real_sets) {
                if (paper_id != review.paper_id) continue;
                ScoredReviewPair pair;
                pair.paper_id = paper_id;
                pair.method_label = review.method_label;
                pair.gen_review_id = review.method_label;
                pair.real_review_id = real_set.review_id;
                pair.n_gen = gen.size();
                pair.n_real = real_set.size();
                pair.scored = pair_scorer.score(gen, real_set);

                EvalReportRow row;
                row.paper_id = pair.paper_id;
                row.method_label = pair.method_label;
                row.gen_review_id = pair.gen_review_id;
                row.real_review_id = pair.real_review_id;
                row.metrics =
                    compute_metrics(matched_edges(pair.scored), pair.n_gen, pair.n_real);
                report.rows.push_back(std::move(row));
                scored_pairs.push_back(std::move(pair));
            }
        }

        if (!report.rows.empty()) {
            std::vector<MetricsReport> metrics;
            for (const auto& row : report.rows) metrics.push_back(row.metrics);
            report.macro = macro_average(metrics);
        }

        const fs::path out_dir(args.out_dir);
        write_file(out_dir / "report.json", eval_report_to_json(report));
        write_file(out_dir / "report.csv", eval_report_to_csv(report));
        if (args.sweep) {
            const SweepGrid grid = threshold_sweep(scored_pairs);
            write_file(out_dir / "sweep.json", sweep_to_json(grid));
            write_file(out_dir / "sweep.csv", sweep_to_csv(grid));
        }
        if (args.human_baseline) {
            std::map<std::string, PaperRealSets> by_paper;
            for (const auto& [paper_id, set] : real_sets) {
                by_paper[paper_id].paper_id = paper_id;
                by_paper[paper_id].reviews.push_back(set);
            }
            std::vector<PaperRealSets> papers;
            for (auto& [id, sets] : by_paper) papers.push_back(std::move(sets));
            try {
                const MacroReport human = human_baseline(papers, pair_scorer);
                json doc;
                doc["schema_version"] = 1;
                doc["recall"] = human.recall;
                doc["precision"] = human.precision;
                doc["jaccard"] = human.jaccard;
                doc["mean_n_gen"] = human.mean_n_gen;
                doc["mean_n_real"] = human.mean_n_real;
                doc["n_rows"] = human.n_reports;
                write_file(out_dir / "human_baseline.json", doc.dump(2) + "\n");
            } catch (const EmptyInputError&) {
                std::cerr << "[warn] no paper has two or more real reviews, "
                             "human baseline skipped\n";
            }
        }
        std::cout << out_dir.string() << ": " << report.rows.size() << " review pair(s), recall "
                  << std::fixed << std::setprecision(4) << report.macro.recall << ", precision "
                  << report.macro.precision << ", jaccard " << report.macro.jaccard << "\n";
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
}

int cmd_cost(const CostArgs& args) {
    try {
        std::vector<fs::path> files;
        for (const auto& p : args.paths) {
            const fs::path path(p);
            if (fs::is_directory(path)) {
                for (const auto& entry : fs::recursive_directory_iterator(path)) {
                    if (entry.is_regular_file() && entry.path().filename() == "usage.json") {
                        files.push_back(entry.path());
                    }
                }
            } else if (fs::exists(path)) {
                files.push_back(path);
            } else {
                std::cerr << "[warn] no such ledger: " << p << "\n";
            }
        }
        std::sort(files.begin(), files.end());

        std::vector<UsageEntry> entries;
        for (const auto& f : files) {
            const auto batch = usage_from_json(read_file(f));
            entries.insert(entries.end(), batch.begin(), batch.end());
        }
        const auto rows = usage_report(entries);

        std::cout << std::left << std::setw(14) << "method" << std::right << std::setw(14)
                  << "input_tokens" << std::setw(18) << "generated_tokens" << std::setw(10)
                  << "requests" << std::setw(8) << "papers" << std::setw(14) << "input/paper"
                  << std::setw(14) << "gen/paper" << "\n";
        for (const auto& row : rows) {
            std::cout << std::left << std::setw(14) << row.method_label << std::right
                      << std::setw(14) << row.input_tokens << std::setw(18)
                      << row.generated_tokens << std::setw(10) << row.n_requests << std::setw(8)
                      << row.n_papers << std::setw(14) << std::fixed << std::setprecision(1)
                      << row.avg_input_per_paper << std::setw(14) << row.avg_generated_per_paper
                      << "\n";
        }

        if (args.json_out) {
            json arr = json::array();
            for (const auto& row : rows) {
                arr.push_back({{"method_label", row.method_label},
                               {"input_tokens", row.input_tokens},
                               {"generated_tokens", row.generated_tokens},
                               {"n_requests", row.n_requests},
                               {"n_papers", row.n_papers},
                               {"avg_input_per_paper", row.avg_input_per_paper},
                               {"avg_generated_per_paper", row.avg_generated_per_paper}});
            }
            json doc;
            doc["schema_version"] = 1;
            doc["rows"] = std::move(arr);
            write_file(*args.json_out, doc.dump(2) + "\n");
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }
}

int cmd_trace(const TraceArgs& args) {
    std::optional<EventTag> filter;
    if (args.filter_tag) {
        try {
            filter = event_tag_from_string(*args.filter_tag);
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitUsage;
        }
    }
    GroupTranscript transcript;
    try {
        transcript = GroupTranscript::from_jsonl(read_file(args.transcript_path));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFatal;
    }

    if (!transcript.group_label.empty()) {
        std::cout << "=== group: " << transcript.group_label << " ===\n";
    }
    for (const auto& e : transcript.events) {
        if (filter && !e.has_tag(*filter)) continue;
        std::cout << "[turn " << e.turn << "] " << e.sender << " -> " << e.receiver;
        if (!e.tags.empty()) {
            std::cout << "  [";
            for (size_t i = 0; i < e.tags.size(); ++i) {
                if (i > 0) std::cout << ", ";
                std::cout << to_string(e.tags[i]);
            }
            std::cout << "]";
        }
        std::cout << "\n";
        if (e.sender.rfind("Agent ", 0) == 0) {
            std::cout << "Message from " << e.sender << ":\n";
        }
        std::cout << e.content << "\n\n";
    }
    return kExitOk;
}

}  // namespace marg::cli
