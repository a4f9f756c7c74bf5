#pragma once

#include <map>
#include <string>
#include <vector>

namespace marg {

// Fills {name} placeholders in `tmpl` from `vars`. Every name in `required`
// must occur in the template, every {placeholder} in the template must have
// a value; otherwise PromptTemplateError. Only lowercase identifiers in
// braces are treated as placeholders, so literal JSON braces pass through.
std::string fill_template(const std::string& tmpl,
                          const std::map<std::string, std::string>& vars,
                          const std::vector<std::string>& required = {});

// Names the keys a prompt bundle provides. The defaults carry the full
// prompt set for every generation method, the protocol texts, and the
// evaluation prompts. Any key can be overridden from a JSON file mapping
// key -> replacement text.
class PromptBundle {
public:
    static PromptBundle defaults();
    static PromptBundle load(const std::string& path);  // defaults + overrides

    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const;
    void set(const std::string& key, std::string text);
    void merge_overrides_json(const std::string& json_text);

    // The literal sentences an agent emits to decline an irrelevant
    // broadcast (keys with prefix "protocol.no_response_marker").
    std::vector<std::string> no_response_markers() const;

    const std::map<std::string, std::string>& all() const { return texts_; }

private:
    std::map<std::string, std::string> texts_;
};

}  // namespace marg
