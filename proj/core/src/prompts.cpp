#include "marg/prompts.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "marg/errors.hpp"

namespace marg {

namespace {

bool is_placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Returns the placeholder name starting at tmpl[pos] == '{', or empty if the
// brace does not open a placeholder.
std::string placeholder_at(const std::string& tmpl, size_t pos, size_t* end) {
    size_t i = pos + 1;
    if (i >= tmpl.size() || !(tmpl[i] >= 'a' && tmpl[i] <= 'z')) return {};
    std::string name;
    while (i < tmpl.size() && is_placeholder_char(tmpl[i])) name.push_back(tmpl[i++]);
    if (i >= tmpl.size() || tmpl[i] != '}') return {};
    *end = i + 1;
    return name;
}

}  // namespace

std::string fill_template(const std::string& tmpl,
                          const std::map<std::string, std::string>& vars,
                          const std::vector<std::string>& required) {
    for (const auto& name : required) {
        if (tmpl.find("{" + name + "}") == std::string::npos) {
            throw PromptTemplateError("template is missing required placeholder {" + name + "}");
        }
    }
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            size_t end = 0;
            const std::string name = placeholder_at(tmpl, i, &end);
            if (!name.empty()) {
                auto it = vars.find(name);
                if (it == vars.end()) {
                    throw PromptTemplateError("no value for placeholder {" + name + "}");
                }
                out += it->second;
                i = end;
                continue;
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

const std::string& PromptBundle::get(const std::string& key) const {
    auto it = texts_.find(key);
    if (it == texts_.end()) throw PromptTemplateError("prompt bundle has no key '" + key + "'");
    return it->second;
}

bool PromptBundle::has(const std::string& key) const { return texts_.count(key) > 0; }

void PromptBundle::set(const std::string& key, std::string text) {
    texts_[key] = std::move(text);
}

void PromptBundle::merge_overrides_json(const std::string& json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw SchemaError("prompt overrides must be a JSON object of key -> text");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!it.value().is_string())
            throw SchemaError("prompt override '" + it.key() + "' must be a string");
        texts_[it.key()] = it.value().get<std::string>();
    }
}

PromptBundle PromptBundle::load(const std::string& path) {
    PromptBundle bundle = defaults();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open prompt bundle file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    bundle.merge_overrides_json(buf.str());
    return bundle;
}

std::vector<std::string> PromptBundle::no_response_markers() const {
    std::vector<std::string> out;
    const std::string prefix = "protocol.no_response_marker";
    for (const auto& [key, text] : texts_) {
        if (key.rfind(prefix, 0) == 0) out.push_back(text);
    }
    return out;
}

}  // namespace marg
