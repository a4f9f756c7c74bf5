#include "marg/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "marg/errors.hpp"

namespace marg {

namespace {

using nlohmann::json;

inline bool is_ws(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Trim and collapse internal whitespace runs to a single space.
std::string normalize_ws(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (is_ws(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

const json* find_string_array(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_array()) throw SchemaError(std::string("'") + key + "' must be an array");
    for (const auto& el : *it) {
        if (!el.is_string()) throw SchemaError(std::string("'") + key + "' entries must be strings");
    }
    return &*it;
}

}  // namespace

int StructuredPaper::paragraph_count() const {
    int n = 0;
    for (const auto& s : sections) n += static_cast<int>(s.paragraphs.size());
    return n;
}

StructuredPaper ingest(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) throw SchemaError("input is not valid JSON");
    if (!doc.is_object()) throw SchemaError("top-level value must be an object");
    if (!doc.contains("title") || !doc["title"].is_string())
        throw SchemaError("missing string field 'title'");
    if (!doc.contains("sections") || !doc["sections"].is_array())
        throw SchemaError("missing array field 'sections'");

    StructuredPaper paper;
    paper.title = normalize_ws(doc["title"].get<std::string>());

    for (const auto& sec : doc["sections"]) {
        if (!sec.is_object()) throw SchemaError("section entries must be objects");
        if (!sec.contains("name") || !sec["name"].is_string())
            throw SchemaError("section missing string field 'name'");
        Section out;
        out.name = normalize_ws(sec["name"].get<std::string>());
        if (out.name.empty()) throw SchemaError("section name empty after trimming");
        const json* paras = find_string_array(sec, "paragraphs");
        if (paras == nullptr) throw SchemaError("section missing array field 'paragraphs'");
        for (const auto& p : *paras) {
            std::string body = normalize_ws(p.get<std::string>());
            if (!body.empty()) out.paragraphs.push_back(std::move(body));
        }
        if (const json* caps = find_string_array(sec, "captions")) {
            for (const auto& c : *caps) {
                std::string cap = normalize_ws(c.get<std::string>());
                if (!cap.empty()) out.captions.push_back(std::move(cap));
            }
        }
        paper.sections.push_back(std::move(out));
    }

    if (paper.paragraph_count() == 0)
        throw EmptyPaperError("no non-empty paragraphs in input");
    return paper;
}

StructuredPaper ingest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open paper file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return ingest(buf.str());
}

std::vector<AnnotatedParagraph> annotate(const StructuredPaper& paper,
                                         const TokenCounter& counter) {
    std::vector<AnnotatedParagraph> out;
    out.reserve(static_cast<size_t>(paper.paragraph_count()));
    int k = 0;
    for (const auto& sec : paper.sections) {
        for (const auto& body : sec.paragraphs) {
            AnnotatedParagraph ap;
            ap.global_index = ++k;
            ap.section_name = sec.name;
            ap.body = body;
            ap.rendered = "[Section: " + sec.name + "] Paragraph " + std::to_string(k) +
                          ": " + body;
            ap.token_count = counter(ap.rendered);
            out.push_back(std::move(ap));
        }
    }
    return out;
}

namespace {

enum class RunClass { space, letter, digit, other };

RunClass classify(unsigned char c) {
    if (is_ws(c)) return RunClass::space;
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return RunClass::letter;
    if (c >= '0' && c <= '9') return RunClass::digit;
    return RunClass::other;
}

// Byte offsets (exclusive) at which `text` may be cut without splitting a
// sentence: after a terminator ([.!?]) plus any following whitespace.
std::vector<size_t> sentence_cut_points(const std::string& text) {
    std::vector<size_t> cuts;
    const size_t n = text.size();
    for (size_t i = 0; i < n; ++i) {
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            size_t j = i + 1;
            while (j < n && is_ws(static_cast<unsigned char>(text[j]))) ++j;
            if (j < n) cuts.push_back(j);
            i = j - 1;
        }
    }
    cuts.push_back(n);
    return cuts;
}

// Splits [begin, end) of `text` into pieces whose token counts are <= budget,
// cutting only at token-run boundaries (or inside a run when a single run
// exceeds the budget on its own).
void split_by_token_runs(const std::string& text, size_t begin, size_t end, int budget,
                         const TokenCounter& counter, std::vector<std::string>& out) {
    size_t piece_start = begin;
    int piece_tokens = 0;
    size_t i = begin;
    while (i < end) {
        const RunClass cls = classify(static_cast<unsigned char>(text[i]));
        size_t j = i;
        while (j < end && classify(static_cast<unsigned char>(text[j])) == cls) ++j;
        int run_tokens = counter(std::string_view(text).substr(i, j - i));
        if (run_tokens > budget) {
            // A single run larger than the whole budget: flush and carve the
            // run into byte segments that each stay within the budget.
            if (piece_start < i) out.push_back(text.substr(piece_start, i - piece_start));
            size_t s = i;
            while (s < j) {
                size_t seg_end = s + 1;
                while (seg_end < j &&
                       counter(std::string_view(text).substr(s, seg_end + 1 - s)) <= budget) {
                    ++seg_end;
                }
                out.push_back(text.substr(s, seg_end - s));
                s = seg_end;
            }
            piece_start = j;
            piece_tokens = 0;
        } else if (piece_tokens + run_tokens > budget) {
            out.push_back(text.substr(piece_start, i - piece_start));
            piece_start = i;
            piece_tokens = run_tokens;
        } else {
            piece_tokens += run_tokens;
        }
        i = j;
    }
    if (piece_start < end) out.push_back(text.substr(piece_start, end - piece_start));
}

// Hard-splits an oversize rendered paragraph into fragments of at most
// `budget` tokens. Fragments concatenate to exactly the input text.
std::vector<std::string> hard_split(const std::string& text, int budget,
                                    const TokenCounter& counter) {
    std::vector<std::string> out;
    const std::vector<size_t> cuts = sentence_cut_points(text);
    size_t frag_start = 0;
    int frag_tokens = 0;
    size_t prev = 0;
    for (size_t cut : cuts) {
        if (cut == prev) continue;
        const int sent_tokens = counter(std::string_view(text).substr(prev, cut - prev));
        if (sent_tokens > budget) {
            if (frag_start < prev) {
                out.push_back(text.substr(frag_start, prev - frag_start));
            }
            split_by_token_runs(text, prev, cut, budget, counter, out);
            frag_start = cut;
            frag_tokens = 0;
        } else if (frag_tokens + sent_tokens > budget) {
            out.push_back(text.substr(frag_start, prev - frag_start));
            frag_start = prev;
            frag_tokens = sent_tokens;
        } else {
            frag_tokens += sent_tokens;
        }
        prev = cut;
    }
    if (frag_start < text.size()) out.push_back(text.substr(frag_start));
    return out;
}

}  // namespace

std::vector<PaperChunk> chunk(const std::vector<AnnotatedParagraph>& paragraphs, int budget,
                              const TokenCounter& counter) {
    if (budget < kMinChunkBudget)
        throw std::invalid_argument("chunk budget must be at least " +
                                    std::to_string(kMinChunkBudget));

    std::vector<PaperChunk> chunks;
    PaperChunk current;

    auto flush = [&] {
        if (current.paragraphs.empty()) return;
        current.chunk_index = static_cast<int>(chunks.size()) + 1;
        current.token_count = counter(current.text);
        chunks.push_back(std::move(current));
        current = PaperChunk{};
    };
    auto append_paragraph = [&](const AnnotatedParagraph& ap) {
        if (!current.paragraphs.empty()) current.text += "\n\n";
        current.text += ap.rendered;
        current.paragraphs.push_back(ap);
    };

    int running = 0;
    for (const auto& ap : paragraphs) {
        if (ap.token_count > budget) {
            flush();
            running = 0;
            for (const std::string& frag : hard_split(ap.rendered, budget, counter)) {
                AnnotatedParagraph fp;
                fp.global_index = ap.global_index;
                fp.section_name = ap.section_name;
                fp.body = frag;
                fp.rendered = frag;
                fp.token_count = counter(frag);
                fp.is_fragment = true;
                append_paragraph(fp);
                flush();
            }
            continue;
        }
        if (!current.paragraphs.empty() && running + ap.token_count > budget) {
            flush();
            running = 0;
        }
        append_paragraph(ap);
        running += ap.token_count;
    }
    flush();
    return chunks;
}

}  // namespace marg
