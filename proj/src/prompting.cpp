#include "ctikg/prompting.hpp"

#include "ctikg/ontology.hpp"
#include "ctikg/util.hpp"

#include <nlohmann/json.hpp>

using json = nlohmann::json;

namespace ctikg::prompting {

ChatFormat parse_chat_format(const std::string& name) {
    std::string k = util::to_lower(util::trim(name));
    if (k == "llama2_inst" || k == "llama2" || k == "inst") return ChatFormat::Llama2Inst;
    if (k == "alpaca") return ChatFormat::Alpaca;
    if (k == "plain") return ChatFormat::Plain;
    throw std::runtime_error("unknown chat format: " + name);
}

std::string chat_format_name(ChatFormat f) {
    switch (f) {
        case ChatFormat::Llama2Inst: return "llama2_inst";
        case ChatFormat::Alpaca: return "alpaca";
        case ChatFormat::Plain: return "plain";
    }
    return "plain";
}

SeparatorStyle parse_separator_style(const std::string& name) {
    std::string k = util::to_lower(util::trim(name));
    if (k == "none" || k.empty()) return SeparatorStyle::None;
    if (k == "quotes") return SeparatorStyle::Quotes;
    if (k == "txt_tags" || k == "txt") return SeparatorStyle::TxtTags;
    if (k == "dashes") return SeparatorStyle::Dashes;
    throw std::runtime_error("unknown separator style: " + name);
}

std::string separator_style_name(SeparatorStyle s) {
    switch (s) {
        case SeparatorStyle::None: return "none";
        case SeparatorStyle::Quotes: return "quotes";
        case SeparatorStyle::TxtTags: return "txt_tags";
        case SeparatorStyle::Dashes: return "dashes";
    }
    return "none";
}

std::string PromptTemplate::frame_for(SeparatorStyle style) {
    switch (style) {
        case SeparatorStyle::Quotes: return "Input text: \"{input}\"";
        case SeparatorStyle::TxtTags: return "Input text: <txt>{input}</txt>";
        case SeparatorStyle::None:
        case SeparatorStyle::Dashes: return "Input text: {input}";
    }
    return "Input text: {input}";
}

namespace {

constexpr std::string_view kPlaceholder = "{input}";

size_t placeholder_count(const std::string& frame) {
    size_t n = 0, pos = 0;
    while ((pos = frame.find(kPlaceholder, pos)) != std::string::npos) {
        ++n;
        pos += kPlaceholder.size();
    }
    return n;
}

std::string fill_frame(const std::string& frame, const std::string& text) {
    std::string out = frame;
    out.replace(out.find(kPlaceholder), kPlaceholder.size(), text);
    return out;
}

void validate_template(const PromptTemplate& t) {
    if (placeholder_count(t.input_frame) != 1)
        throw PromptError(PromptError::Kind::MissingPlaceholder,
                          "template '" + t.name + "': input frame must contain {input} exactly once");
    if (t.examples.size() > kMaxFewShotExamples)
        throw PromptError(PromptError::Kind::TooManyExamples,
                          "template '" + t.name + "': at most 4 few-shot examples");
}

std::string render_llama2(const PromptTemplate& t, const std::string& input_text) {
    std::string first = "[INST] ";
    if (!t.system_text.empty()) first += "<<SYS>>\n" + t.system_text + "\n<</SYS>>\n\n";
    if (!t.instruction_text.empty()) first += t.instruction_text + " ";

    std::string out = first;
    const std::string& cue = t.assistant_cue;
    for (size_t i = 0; i < t.examples.size(); ++i) {
        out += fill_frame(t.input_frame, t.examples[i].input_text) + " [/INST]";
        if (!cue.empty()) out += " " + cue;
        out += " " + t.examples[i].triples_text + " </s><s>[INST] ";
    }
    out += fill_frame(t.input_frame, input_text) + " [/INST]";
    if (!cue.empty()) out += " " + cue;
    return out;
}

std::string render_alpaca(const PromptTemplate& t, const std::string& input_text) {
    std::string out;
    if (!t.system_text.empty()) out += t.system_text + "\n";
    out += "### Instruction: " + t.instruction_text + "\n";
    for (const FewShotExample& ex : t.examples)
        out += "### Input: " + fill_frame(t.input_frame, ex.input_text) + "\n### Response: " +
               ex.triples_text + "\n";
    out += "### Input: " + fill_frame(t.input_frame, input_text) + "\n### Response: ";
    return out;
}

std::string render_plain(const PromptTemplate& t, const std::string& input_text) {
    std::vector<std::string> parts;
    if (!t.system_text.empty()) parts.push_back(t.system_text);
    if (!t.instruction_text.empty()) parts.push_back(t.instruction_text);
    const std::string& cue = t.assistant_cue;
    for (const FewShotExample& ex : t.examples) {
        if (!t.example_separator.empty()) parts.push_back(t.example_separator);
        std::string block = fill_frame(t.input_frame, ex.input_text);
        if (!cue.empty()) block += "\n" + cue + " " + ex.triples_text;
        parts.push_back(std::move(block));
    }
    if (!t.example_separator.empty()) parts.push_back(t.example_separator);
    std::string final_block = fill_frame(t.input_frame, input_text);
    if (!cue.empty()) final_block += "\n" + cue;
    parts.push_back(std::move(final_block));

    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "\n";
        out += parts[i];
    }
    return out;
}

const std::string kSpyNoteText =
    "A new version of the SpyNote Trojan is designed to trick Android users into thinking "
    "it's a legitimate Netflix application. Once installed, the remote access Trojan (RAT) "
    "essentially hands control of the device over to the hacker, enabling them to copy "
    "files, view contacts, and eavesdrop on the victim, among other capabilities.";

const std::string kSpyNoteTriples =
    "[SpyNote, isA, Trojan], [SpyNote, targets, Android], [SpyNote, uses, designed to trick "
    "Android users into thinking it's a legitimate Netflix application], [SpyNote, isA, "
    "remote access Trojan], [SpyNote, isA, RAT], [SpyNote, uses, hands control of the "
    "device over to the hacker], [SpyNote, uses, enabling them to copy files], [SpyNote, "
    "uses, view contacts], [SpyNote, uses, eavesdrop on the victim]";

const std::string kEmmentalText =
    "Operation Emmental was discovered on July 22, 2014. The campaign targets banks in "
    "Austria and Switzerland and uses Android malware to bypass two-factor authentication.";

const std::string kEmmentalTypedTriples =
    "[Operation Emmental[ThreatActor], discoveredIn, July 22, 2014[Time]], "
    "[Operation Emmental[ThreatActor], targets, Austria[Location]], "
    "[Operation Emmental[ThreatActor], targets, Switzerland[Location]], "
    "[Operation Emmental[ThreatActor], uses, Android malware[MalwareType]]";

std::string relation_listing() {
    std::string out;
    auto rels = ontology::all_relation_types();
    for (size_t i = 0; i < rels.size(); ++i) {
        if (i) out += i + 1 == rels.size() ? ", and " : ", ";
        out += std::string(ontology::relation_name(rels[i]));
    }
    return out;
}

std::string entity_listing() {
    std::string out;
    auto types = ontology::all_entity_types();
    for (size_t i = 0; i < types.size(); ++i) {
        if (i) out += i + 1 == types.size() ? ", and " : ", ";
        out += std::string(ontology::entity_type_name(types[i]));
    }
    return out;
}

}  // namespace

std::string ontology_listing() {
    return "Extract cybersecurity-related triples consisting of entities of the types " +
           entity_listing() + " and relationships between these entities of the types " +
           relation_listing() + ".";
}

std::string render_prompt(const PromptTemplate& tmpl, const std::string& input_text) {
    validate_template(tmpl);
    switch (tmpl.format) {
        case ChatFormat::Llama2Inst: return render_llama2(tmpl, input_text);
        case ChatFormat::Alpaca: return render_alpaca(tmpl, input_text);
        case ChatFormat::Plain: return render_plain(tmpl, input_text);
    }
    throw std::logic_error("unreachable chat format");
}

std::vector<PromptTemplate> builtin_templates() {
    std::vector<PromptTemplate> out;

    {
        PromptTemplate t;
        t.name = "minimal_zeroshot";
        t.format = ChatFormat::Llama2Inst;
        t.instruction_text =
            "Extract [subject, predicate, object]-triples from the following input text.";
        t.input_frame = PromptTemplate::frame_for(SeparatorStyle::Quotes);
        out.push_back(std::move(t));
    }
    {
        PromptTemplate t;
        t.name = "ontology_system_oneshot";
        t.format = ChatFormat::Llama2Inst;
        t.system_text = ontology_listing() +
                        " Print the extracted triples in the format: [Entity1, Relation, Entity2]";
        t.instruction_text = "Extract triples from the following text:";
        t.input_frame = PromptTemplate::frame_for(SeparatorStyle::Quotes);
        t.assistant_cue = "Extracted triples:";
        t.examples.push_back({kSpyNoteText, kSpyNoteTriples});
        out.push_back(std::move(t));
    }
    {
        PromptTemplate t;
        t.name = "relation_list_oneshot";
        t.format = ChatFormat::Llama2Inst;
        t.system_text =
            "Extract [subject, predicate, object]-triples from the input text with the "
            "following predicates: " +
            relation_listing() + ".";
        t.input_frame = PromptTemplate::frame_for(SeparatorStyle::None);
        t.assistant_cue = "Extracted triples:";
        t.examples.push_back({kSpyNoteText, kSpyNoteTriples});
        out.push_back(std::move(t));
    }
    {
        PromptTemplate t;
        t.name = "guidance_oneshot";
        t.format = ChatFormat::Plain;
        t.instruction_text =
            "Extract triples from the following input text. Your answers need to be in the "
            "format [subject, predicate, object].";
        t.input_frame = PromptTemplate::frame_for(SeparatorStyle::Dashes);
        t.assistant_cue = "Extracted triples:";
        t.example_separator = "-----------";
        t.examples.push_back({kSpyNoteText, kSpyNoteTriples});
        out.push_back(std::move(t));
    }
    {
        PromptTemplate t;
        t.name = "alpaca_finetune";
        t.format = ChatFormat::Alpaca;
        t.instruction_text =
            "Extract [subject, predicate, object]-triples from the following input text.";
        t.input_frame = "{input}";
        out.push_back(std::move(t));
    }
    {
        PromptTemplate t;
        t.name = "typed_output_oneshot";
        t.format = ChatFormat::Llama2Inst;
        t.system_text =
            ontology_listing() +
            " Print the extracted triples in the format: "
            "[Entity1[EntityType], Relation, Entity2[EntityType]]";
        t.instruction_text = "Extract typed triples from the following text:";
        t.input_frame = PromptTemplate::frame_for(SeparatorStyle::Quotes);
        t.assistant_cue = "Extracted triples:";
        t.examples.push_back({kEmmentalText, kEmmentalTypedTriples});
        out.push_back(std::move(t));
    }
    {
        PromptTemplate t;
        t.name = "assistant_relations_zeroshot";
        t.format = ChatFormat::Llama2Inst;
        t.system_text =
            "You are a helpful cyber-security assistant. Your task is to extract "
            "[entity, relationship, entity]-triples from the input text. Use only the "
            "relationships: " +
            relation_listing() +
            ". Your answers need to be in the format [entity, relationship, entity]. "
            "Reply only with the extracted triples.";
        t.instruction_text = "What are the triples in the following input text:";
        t.input_frame = "{input}";
        out.push_back(std::move(t));
    }
    return out;
}

PromptTemplate get_template(const std::string& name) {
    for (PromptTemplate& t : builtin_templates())
        if (t.name == name) return std::move(t);
    throw PromptError(PromptError::Kind::NotFound, "no such template: " + name);
}

namespace {

PromptTemplate template_from_json(const json& j) {
    PromptTemplate t;
    t.name = j.at("name").get<std::string>();
    t.format = parse_chat_format(j.value("format", "plain"));
    t.system_text = j.value("system", "");
    t.instruction_text = j.value("instruction", "");
    SeparatorStyle style = parse_separator_style(j.value("separator_style", "none"));
    t.input_frame = j.value("input_frame", PromptTemplate::frame_for(style));
    if (style == SeparatorStyle::Dashes && !j.contains("example_separator"))
        t.example_separator = "-----------";
    else
        t.example_separator = j.value("example_separator", "");
    t.assistant_cue = j.value("assistant_cue", "");
    if (j.contains("examples"))
        for (const json& ex : j["examples"])
            t.examples.push_back({ex.at("input").get<std::string>(),
                                  ex.at("triples").get<std::string>()});
    validate_template(t);
    return t;
}

}  // namespace

std::vector<PromptTemplate> load_templates(const std::string& path) {
    json j = json::parse(util::read_file(path));
    std::vector<PromptTemplate> out;
    if (j.is_array())
        for (const json& item : j) out.push_back(template_from_json(item));
    else
        out.push_back(template_from_json(j));
    return out;
}

}  // namespace ctikg::prompting
