#include "marg/eval.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "marg/errors.hpp"
#include "marg/review.hpp"

namespace marg {

namespace {
using nlohmann::json;

std::string complete_text(Backend& backend, const PipelineOptions& opts, const CallContext& ctx,
                          std::vector<ChatMessage> messages) {
    CompletionRequest request;
    request.model_id = opts.model_id;
    request.messages = std::move(messages);
    request.sampling = opts.sampling;
    return backend.complete(request, ctx).content;
}

// Finds the first balanced JSON value of the requested type in free text.
json find_json_value(const std::string& text, bool want_object) {
    const char open = want_object ? '{' : '[';
    for (size_t pos = 0; pos < text.size(); ++pos) {
        if (text[pos] != open) continue;
        int depth = 0;
        bool in_string = false;
        for (size_t i = pos; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') {
                    ++i;
                } else if (c == '"') {
                    in_string = false;
                }
            } else if (c == '"') {
                in_string = true;
            } else if (c == '{' || c == '[') {
                ++depth;
            } else if (c == '}' || c == ']') {
                if (--depth == 0) {
                    json doc = json::parse(text.substr(pos, i - pos + 1), nullptr, false);
                    if (!doc.is_discarded()) return doc;
                    break;
                }
            }
        }
    }
    return json();  // null
}

bool find_word(const std::string& haystack, const std::string& word, size_t* pos_out) {
    size_t pos = 0;
    while ((pos = haystack.find(word, pos)) != std::string::npos) {
        const bool left_ok =
            pos == 0 || !std::isalnum(static_cast<unsigned char>(haystack[pos - 1]));
        const size_t end = pos + word.size();
        const bool right_ok =
            end >= haystack.size() || !std::isalnum(static_cast<unsigned char>(haystack[end]));
        if (left_ok && right_ok) {
            *pos_out = pos;
            return true;
        }
        ++pos;
    }
    return false;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

const char* to_string(Relatedness r) {
    switch (r) {
        case Relatedness::none: return "none";
        case Relatedness::weak: return "weak";
        case Relatedness::medium: return "medium";
        case Relatedness::high: return "high";
    }
    return "none";
}

const char* to_string(Specificity s) {
    switch (s) {
        case Specificity::less: return "less";
        case Specificity::same: return "same";
        case Specificity::more: return "more";
    }
    return "less";
}

Relatedness relatedness_from_string(const std::string& s) {
    if (s == "none") return Relatedness::none;
    if (s == "weak") return Relatedness::weak;
    if (s == "medium") return Relatedness::medium;
    if (s == "high") return Relatedness::high;
    throw std::invalid_argument("unknown relatedness level: " + s);
}

Specificity specificity_from_string(const std::string& s) {
    if (s == "less") return Specificity::less;
    if (s == "same") return Specificity::same;
    if (s == "more") return Specificity::more;
    throw std::invalid_argument("unknown specificity level: " + s);
}

CommentSet CommentSet::make(Owner owner, std::string review_id,
                            std::vector<std::string> comments) {
    CommentSet set;
    set.owner = owner;
    set.review_id = std::move(review_id);
    std::set<std::string> seen;
    for (auto& c : comments) {
        if (seen.insert(c).second) set.comments.push_back(std::move(c));
    }
    return set;
}

CommentSet extract_comments(const std::string& review_text, const std::string& review_id,
                            Backend& backend, const PromptBundle& bundle,
                            const PipelineOptions& opts, CommentSet::Owner owner) {
    const CallContext ctx{"eval-extract", opts.paper_id, ""};
    const std::string reply = complete_text(
        backend, opts, ctx,
        {{Role::system, bundle.get("eval.system")},
         {Role::user, fill_template(bundle.get("eval.extract"), {{"review_text", review_text}})}});
    return CommentSet::make(owner, review_id, parse_comment_list(reply));
}

namespace {

// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<int> permutation(int n, std::mt19937_64& rng) {
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    return idx;
}

std::string comment_block(const char* label, const CommentSet& set,
                          const std::vector<int>& order) {
    std::string out = std::string(label) + ":\n";
    for (size_t i = 0; i < order.size(); ++i) {
        out += std::to_string(i + 1) + ". " +
               set.comments[static_cast<size_t>(order[i])];
        if (i + 1 < order.size()) out += "\n";
    }
    return out;
}

}  // namespace

std::vector<CandidatePair> many_many_match(const CommentSet& gen, const CommentSet& real,
                                           Backend& backend, const PromptBundle& bundle,
                                           const PipelineOptions& opts,
                                           const ManyManyParams& params) {
    if (gen.comments.empty() || real.comments.empty()) return {};

    std::unordered_map<std::string, int> gen_index;
    std::unordered_map<std::string, int> real_index;
    for (int i = 0; i < gen.size(); ++i) gen_index.emplace(gen.comments[static_cast<size_t>(i)], i);
    for (int i = 0; i < real.size(); ++i)
        real_index.emplace(real.comments[static_cast<size_t>(i)], i);

    std::mt19937_64 rng(params.seed);
    std::map<std::pair<int, int>, int> votes;
    const CallContext ctx{"eval-match", opts.paper_id, ""};

    for (int pass = 0; pass < params.passes; ++pass) {
        const auto gen_order = permutation(gen.size(), rng);
        const auto real_order = permutation(real.size(), rng);
        const bool gen_first = (rng() & 1) == 0;

        const std::string gen_block =
            comment_block("Generated review comments", gen, gen_order);
        const std::string real_block =
            comment_block("Real reviewer comments", real, real_order);
        const std::string prompt = fill_template(
            bundle.get("eval.many_many"),
            {{"first_block", gen_first ? gen_block : real_block},
             {"second_block", gen_first ? real_block : gen_block}});

        const std::string reply = complete_text(
            backend, opts, ctx,
            {{Role::system, bundle.get("eval.system")}, {Role::user, prompt}});

        const json pairs = find_json_value(reply, /*want_object=*/false);
        if (!pairs.is_array()) {
            std::cerr << "[warn] many-many pass " << pass + 1
                      << " output unparseable, contributes no votes\n";
            continue;
        }
        std::set<std::pair<int, int>> seen_this_pass;
        for (const auto& p : pairs) {
            if (!p.is_object() || !p.contains("generated") || !p.contains("real")) continue;
            if (!p["generated"].is_string() || !p["real"].is_string()) continue;
            const auto gi = gen_index.find(p["generated"].get<std::string>());
            const auto ri = real_index.find(p["real"].get<std::string>());
            if (gi == gen_index.end() || ri == real_index.end()) {
                std::cerr << "[warn] many-many pass " << pass + 1
                          << " referenced an unknown comment, pair skipped\n";
                continue;
            }
            const std::pair<int, int> key{gi->second, ri->second};
            if (seen_this_pass.insert(key).second) votes[key] += 1;
        }
    }

    std::vector<CandidatePair> out;
    for (const auto& [key, n] : votes) {
        if (n >= params.vote_threshold) out.push_back({key.first, key.second, n});
    }
    return out;
}

std::pair<Relatedness, Specificity> pairwise_score(const std::string& gen_comment,
                                                   const std::string& real_comment,
                                                   Backend& backend, const PromptBundle& bundle,
                                                   const PipelineOptions& opts) {
    const CallContext ctx{"eval-pairwise", opts.paper_id, ""};
    const std::string reply = complete_text(
        backend, opts, ctx,
        {{Role::system, bundle.get("eval.system")},
         {Role::user, fill_template(bundle.get("eval.pairwise"),
                                    {{"gen_comment", gen_comment},
                                     {"real_comment", real_comment}})}});

    const json doc = find_json_value(reply, /*want_object=*/true);
    if (doc.is_object() && doc.contains("relatedness") && doc.contains("specificity") &&
        doc["relatedness"].is_string() && doc["specificity"].is_string()) {
        try {
            return {relatedness_from_string(lower(doc["relatedness"].get<std::string>())),
                    specificity_from_string(lower(doc["specificity"].get<std::string>()))};
        } catch (const std::invalid_argument&) {
            // fall through to the word scan
        }
    }

    const std::string text = lower(reply);
    Relatedness r = Relatedness::none;
    Specificity s = Specificity::less;
    size_t best = std::string::npos;
    for (Relatedness level :
         {Relatedness::none, Relatedness::weak, Relatedness::medium, Relatedness::high}) {
        size_t pos = 0;
        if (find_word(text, to_string(level), &pos) && pos < best) {
            best = pos;
            r = level;
        }
    }
    bool found_r = best != std::string::npos;
    best = std::string::npos;
    bool found_s = false;
    for (Specificity level : {Specificity::less, Specificity::same, Specificity::more}) {
        size_t pos = 0;
        if (find_word(text, to_string(level), &pos) && pos < best) {
            best = pos;
            s = level;
            found_s = true;
        }
    }
    if (!found_r || !found_s) {
        std::cerr << "[warn] pairwise output unparseable, scored (none, less)\n";
        return {Relatedness::none, Specificity::less};
    }
    return {r, s};
}

bool detect_compliment(const std::string& comment, Backend& backend, const PromptBundle& bundle,
                       const PipelineOptions& opts) {
    const CallContext ctx{"eval-compliment", opts.paper_id, ""};
    const std::string reply = complete_text(
        backend, opts, ctx,
        {{Role::system, bundle.get("eval.system")},
         {Role::user, fill_template(bundle.get("eval.compliment"), {{"comment", comment}})}});
    const json doc = find_json_value(reply, /*want_object=*/true);
    if (doc.is_object() && doc.contains("has_compliment") && doc["has_compliment"].is_boolean()) {
        return doc["has_compliment"].get<bool>();
    }
    std::cerr << "[warn] compliment-detection output unparseable, treated as false\n";
    return false;
}

bool decide_match(Relatedness r, Specificity s, Relatedness min_r, Specificity min_s) {
    return static_cast<int>(r) >= static_cast<int>(min_r) &&
           static_cast<int>(s) >= static_cast<int>(min_s);
}

std::vector<AlignmentEdge> matched_edges(const std::vector<AlignmentEdge>& scored,
                                         Relatedness min_r, Specificity min_s) {
    std::vector<AlignmentEdge> out;
    for (const auto& e : scored) {
        if (decide_match(e.relatedness, e.specificity, min_r, min_s)) out.push_back(e);
    }
    return out;
}

std::pair<int, int> directional_counts(const std::vector<AlignmentEdge>& edges, int n_gen,
                                       int n_real) {
    std::set<int> left;
    std::set<int> right;
    for (const auto& e : edges) {
        if (e.gen_index < 0 || e.gen_index >= n_gen || e.real_index < 0 ||
            e.real_index >= n_real) {
            throw std::out_of_range("alignment edge (" + std::to_string(e.gen_index) + ", " +
                                    std::to_string(e.real_index) + ") out of range");
        }
        left.insert(e.gen_index);
        right.insert(e.real_index);
    }
    return {static_cast<int>(left.size()), static_cast<int>(right.size())};
}

MetricsReport compute_metrics(const std::vector<AlignmentEdge>& edges, int n_gen, int n_real) {
    MetricsReport report;
    report.n_gen = n_gen;
    report.n_real = n_real;
    const auto [left, right] = directional_counts(edges, n_gen, n_real);
    report.n_left_aligned = left;
    report.n_right_aligned = right;
    report.recall = n_real > 0 ? static_cast<double>(right) / n_real : 0.0;
    report.precision = n_gen > 0 ? static_cast<double>(left) / n_gen : 0.0;
    const double intersection = (left + right) / 2.0;
    const double denom = n_gen + n_real - intersection;
    report.jaccard = denom > 0 ? intersection / denom : 0.0;
    return report;
}

MacroReport macro_average(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw EmptyInputError("macro_average over an empty report list");
    MacroReport macro;
    for (const auto& r : reports) {
        macro.recall += r.recall;
        macro.precision += r.precision;
        macro.jaccard += r.jaccard;
        macro.mean_n_gen += r.n_gen;
        macro.mean_n_real += r.n_real;
    }
    const double n = static_cast<double>(reports.size());
    macro.recall /= n;
    macro.precision /= n;
    macro.jaccard /= n;
    macro.mean_n_gen /= n;
    macro.mean_n_real /= n;
    macro.n_reports = static_cast<int>(reports.size());
    return macro;
}

BackendPairScorer::BackendPairScorer(Backend& backend, const PromptBundle& bundle,
                                     const PipelineOptions& opts, ManyManyParams params)
    : backend_(backend), bundle_(bundle), opts_(opts), params_(params) {}

std::vector<AlignmentEdge> BackendPairScorer::score(const CommentSet& gen,
                                                    const CommentSet& real) {
    std::vector<AlignmentEdge> out;
    for (const auto& cand : many_many_match(gen, real, backend_, bundle_, opts_, params_)) {
        const auto [r, s] =
            pairwise_score(gen.comments[static_cast<size_t>(cand.gen_index)],
                           real.comments[static_cast<size_t>(cand.real_index)], backend_,
                           bundle_, opts_);
        out.push_back({cand.gen_index, cand.real_index, r, s, cand.votes});
    }
    return out;
}

void TablePairScorer::add(const std::string& gen_text, const std::string& real_text,
                          Relatedness r, Specificity s, int votes) {
    entries_.push_back({gen_text, real_text, r, s, votes});
}

std::vector<AlignmentEdge> TablePairScorer::score(const CommentSet& gen, const CommentSet& real) {
    std::vector<AlignmentEdge> out;
    for (const auto& entry : entries_) {
        const auto gi = std::find(gen.comments.begin(), gen.comments.end(), entry.gen_text);
        const auto ri = std::find(real.comments.begin(), real.comments.end(), entry.real_text);
        if (gi == gen.comments.end() || ri == real.comments.end()) continue;
        out.push_back({static_cast<int>(gi - gen.comments.begin()),
                       static_cast<int>(ri - real.comments.begin()), entry.relatedness,
                       entry.specificity, entry.votes});
    }
    return out;
}

SweepGrid threshold_sweep(const std::vector<ScoredReviewPair>& pairs) {
    SweepGrid grid;
    grid.relatedness_levels = {Relatedness::none, Relatedness::weak, Relatedness::medium,
                               Relatedness::high};
    grid.specificity_levels = {Specificity::less, Specificity::same, Specificity::more};
    for (Relatedness min_r : grid.relatedness_levels) {
        std::vector<double> row;
        for (Specificity min_s : grid.specificity_levels) {
            std::vector<MetricsReport> reports;
            reports.reserve(pairs.size());
            for (const auto& pair : pairs) {
                reports.push_back(compute_metrics(matched_edges(pair.scored, min_r, min_s),
                                                  pair.n_gen, pair.n_real));
            }
            row.push_back(reports.empty() ? 0.0 : macro_average(reports).recall);
        }
        grid.recall.push_back(std::move(row));
    }
    return grid;
}

MacroReport human_baseline(const std::vector<PaperRealSets>& papers, PairScorer& scorer) {
    std::vector<MetricsReport> reports;
    for (const auto& paper : papers) {
        if (paper.reviews.size() < 2) {
            std::cerr << "[warn] paper '" << paper.paper_id
                      << "' has fewer than two reviews, skipped in human baseline\n";
            continue;
        }
        for (size_t i = 0; i < paper.reviews.size(); ++i) {
            CommentSet gen = paper.reviews[i];
            gen.owner = CommentSet::Owner::generated;

            std::vector<std::string> pooled;
            for (size_t k = 0; k < paper.reviews.size(); ++k) {
                if (k == i) continue;
                const auto& c = paper.reviews[k].comments;
                pooled.insert(pooled.end(), c.begin(), c.end());
            }
            CommentSet real = CommentSet::make(
                CommentSet::Owner::real,
                paper.paper_id + ":pooled-except-" + paper.reviews[i].review_id,
                std::move(pooled));

            const auto scored = scorer.score(gen, real);
            reports.push_back(compute_metrics(matched_edges(scored), gen.size(), real.size()));
        }
    }
    return macro_average(reports);
}

std::string eval_report_to_json(const EvalReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"paper_id", row.paper_id},
                        {"method_label", row.method_label},
                        {"gen_review_id", row.gen_review_id},
                        {"real_review_id", row.real_review_id},
                        {"recall", row.metrics.recall},
                        {"precision", row.metrics.precision},
                        {"jaccard", row.metrics.jaccard},
                        {"n_gen", row.metrics.n_gen},
                        {"n_real", row.metrics.n_real},
                        {"n_left_aligned", row.metrics.n_left_aligned},
                        {"n_right_aligned", row.metrics.n_right_aligned}});
    }
    json doc;
    doc["schema_version"] = 1;
    doc["rows"] = std::move(rows);
    doc["macro"] = {{"recall", report.macro.recall},
                    {"precision", report.macro.precision},
                    {"jaccard", report.macro.jaccard},
                    {"mean_n_gen", report.macro.mean_n_gen},
                    {"mean_n_real", report.macro.mean_n_real},
                    {"n_rows", report.macro.n_reports}};
    return doc.dump(2) + "\n";
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << v;
    return os.str();
}

}  // namespace

std::string eval_report_to_csv(const EvalReport& report) {
    std::string out =
        "paper_id,method_label,gen_review_id,real_review_id,recall,precision,jaccard,"
        "n_gen,n_real,n_left_aligned,n_right_aligned\n";
    for (const auto& row : report.rows) {
        out += csv_escape(row.paper_id) + "," + csv_escape(row.method_label) + "," +
               csv_escape(row.gen_review_id) + "," + csv_escape(row.real_review_id) + "," +
               fmt(row.metrics.recall) + "," + fmt(row.metrics.precision) + "," +
               fmt(row.metrics.jaccard) + "," + std::to_string(row.metrics.n_gen) + "," +
               std::to_string(row.metrics.n_real) + "," +
               std::to_string(row.metrics.n_left_aligned) + "," +
               std::to_string(row.metrics.n_right_aligned) + "\n";
    }
    return out;
}

std::string sweep_to_json(const SweepGrid& grid) {
    json doc;
    doc["schema_version"] = 1;
    json r_levels = json::array();
    for (Relatedness r : grid.relatedness_levels) r_levels.push_back(to_string(r));
    json s_levels = json::array();
    for (Specificity s : grid.specificity_levels) s_levels.push_back(to_string(s));
    doc["relatedness_levels"] = std::move(r_levels);
    doc["specificity_levels"] = std::move(s_levels);
    doc["recall"] = grid.recall;
    return doc.dump(2) + "\n";
}

std::string sweep_to_csv(const SweepGrid& grid) {
    std::string out = "relatedness";
    for (Specificity s : grid.specificity_levels) out += std::string(",") + to_string(s);
    out += "\n";
    for (size_t i = 0; i < grid.relatedness_levels.size(); ++i) {
        out += to_string(grid.relatedness_levels[i]);
        for (double v : grid.recall[i]) out += "," + fmt(v);
        out += "\n";
    }
    return out;
}

}  // namespace marg
