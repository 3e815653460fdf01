#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctikg::prompting {

// Chat framing the rendered prompt is wrapped in. Llama2Inst uses
// [INST]/<<SYS>> framing, Alpaca uses "### Instruction:" headers, Plain
// emits instruction and input with no chat tokens.
enum class ChatFormat { Llama2Inst, Alpaca, Plain };

ChatFormat parse_chat_format(const std::string& name);
std::string chat_format_name(ChatFormat f);

// How the input text is set off from the instruction; compared variants are
// quotes, <txt></txt> tags, dashed separator lines, or nothing.
enum class SeparatorStyle { None, Quotes, TxtTags, Dashes };

SeparatorStyle parse_separator_style(const std::string& name);
std::string separator_style_name(SeparatorStyle s);

struct FewShotExample {
    std::string input_text;
    std::string triples_text;  // serialized triples in the target output format
};

inline constexpr int kMaxFewShotExamples = 4;

struct PromptTemplate {
    std::string name;
    ChatFormat format = ChatFormat::Plain;
    std::string system_text;       // empty = no system block
    std::string instruction_text;  // task instruction (may embed the ontology)
    // Frame for the input text; must contain the {input} marker exactly once.
    std::string input_frame = "Input text: {input}";
    std::string assistant_cue;  // e.g. "Extracted triples:"; empty = none
    std::vector<FewShotExample> examples;
    std::string example_separator;  // e.g. "-----------" between turns (Plain)

    static std::string frame_for(SeparatorStyle style);
};

struct PromptError : std::runtime_error {
    enum class Kind { MissingPlaceholder, TooManyExamples, NotFound };
    Kind kind;
    PromptError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Byte-deterministic assembly of the prompt for `input_text`.
std::string render_prompt(const PromptTemplate& tmpl, const std::string& input_text);

// Built-in catalog covering the prompt families used for extraction.
std::vector<PromptTemplate> builtin_templates();
PromptTemplate get_template(const std::string& name);

// Loads templates from a JSON file (array of objects or one object) with
// fields {name, format, system, instruction, examples[], separator_style}
// plus optional {input_frame, assistant_cue, example_separator}.
std::vector<PromptTemplate> load_templates(const std::string& path);

// The ontology listing embedded in catalog prompts.
std::string ontology_listing();

}  // namespace ctikg::prompting
