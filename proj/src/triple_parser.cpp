#include "ctikg/triple_parser.hpp"

#include "ctikg/util.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace ctikg::parser {

std::string shape_name(TripleShape s) {
    switch (s) {
        case TripleShape::Bracketed: return "bracketed";
        case TripleShape::Quoted: return "quoted";
        case TripleShape::Numbered: return "numbered";
        case TripleShape::Typed: return "typed";
    }
    return "bracketed";
}

std::vector<ontology::TypedTriple> ParseReport::triples() const {
    std::vector<ontology::TypedTriple> out;
    out.reserve(parsed.size());
    for (const ParsedTriple& p : parsed) out.push_back(p.triple);
    return out;
}

namespace {

// Splits on commas at zero bracket AND parenthesis depth, so free-text
// fields like "security services (e.g., firewall, AV)" stay intact.
std::vector<std::string> split_top_level(const std::string& s) {
    std::vector<std::string> fields;
    int sq = 0, par = 0;
    size_t start = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '[') ++sq;
        else if (c == ']') sq = std::max(0, sq - 1);
        else if (c == '(') ++par;
        else if (c == ')') par = std::max(0, par - 1);
        else if (c == ',' && sq == 0 && par == 0) {
            fields.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    fields.push_back(s.substr(start));
    return fields;
}

// One layer of outermost matching quotes.
std::string strip_quotes(const std::string& s, bool* stripped) {
    if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
        if (stripped) *stripped = true;
        return s.substr(1, s.size() - 2);
    }
    if (stripped) *stripped = false;
    return s;
}

struct FieldParts {
    std::string surface;
    std::string type_label;  // empty when the field carries no [Type] suffix
};

// "Adwind[Malware]" -> {"Adwind", "Malware"}. A field that is entirely
// bracketed has no surface and is not treated as tagged.
FieldParts split_type_tag(const std::string& field) {
    if (field.empty() || field.back() != ']') return {field, ""};
    int depth = 0;
    size_t open = std::string::npos;
    for (size_t i = field.size(); i-- > 0;) {
        if (field[i] == ']') ++depth;
        else if (field[i] == '[') {
            --depth;
            if (depth == 0) {
                open = i;
                break;
            }
        }
    }
    if (open == std::string::npos || open == 0) return {field, ""};
    std::string surface = util::trim(field.substr(0, open));
    std::string label = field.substr(open + 1, field.size() - open - 2);
    if (surface.empty() || label.empty()) return {field, ""};
    return {surface, label};
}

struct GroupOutcome {
    bool ok = false;
    ontology::TypedTriple triple;
    TripleShape shape = TripleShape::Bracketed;
    std::string reject_reason;
    std::vector<std::string> bad_type_labels;
};

GroupOutcome parse_group_content(const std::string& content) {
    GroupOutcome out;
    std::vector<std::string> raw_fields = split_top_level(content);
    for (std::string& f : raw_fields) f = util::trim(f);

    bool all_quoted = raw_fields.size() >= 3;
    std::vector<std::string> fields;
    for (const std::string& f : raw_fields) {
        bool stripped = false;
        fields.push_back(util::trim(strip_quotes(f, &stripped)));
        all_quoted = all_quoted && stripped;
    }

    // A typed tuple's tail may contain top-level commas (dates do); re-join
    // the extra fields when the last one carries a type tag.
    if (fields.size() > 3 && !split_type_tag(fields.back()).type_label.empty()) {
        std::string tail = fields[2];
        for (size_t i = 3; i < fields.size(); ++i) tail += ", " + fields[i];
        fields = {fields[0], fields[1], tail};
    }

    if (fields.size() != 3) {
        out.reject_reason = "expected 3 fields, got " + std::to_string(fields.size());
        return out;
    }

    FieldParts head = split_type_tag(fields[0]);
    FieldParts tail = split_type_tag(fields[2]);
    bool tagged = !head.type_label.empty() || !tail.type_label.empty();

    ontology::TypedTriple t;
    t.head = util::trim(head.surface);
    t.relation = util::trim(fields[1]);
    t.tail = util::trim(tail.surface);
    if (t.head.empty() || t.tail.empty() || t.relation.empty()) {
        out.reject_reason = "empty field";
        return out;
    }
    if (!head.type_label.empty()) {
        if (auto et = ontology::try_parse_entity_type(head.type_label)) t.head_type = *et;
        else out.bad_type_labels.push_back(head.type_label);
    }
    if (!tail.type_label.empty()) {
        if (auto et = ontology::try_parse_entity_type(tail.type_label)) t.tail_type = *et;
        else out.bad_type_labels.push_back(tail.type_label);
    }

    out.ok = true;
    out.triple = std::move(t);
    out.shape = tagged ? TripleShape::Typed
                       : (all_quoted ? TripleShape::Quoted : TripleShape::Bracketed);
    return out;
}

// Top-level [ ... ] groups of a line, with nesting for type tags.
std::vector<std::string> bracket_groups(const std::string& line) {
    std::vector<std::string> groups;
    size_t i = 0;
    while (i < line.size()) {
        if (line[i] != '[') {
            ++i;
            continue;
        }
        int depth = 0;
        size_t j = i;
        for (; j < line.size(); ++j) {
            if (line[j] == '[') ++depth;
            else if (line[j] == ']' && --depth == 0) break;
        }
        if (j >= line.size()) break;  // unbalanced; ignore the rest
        groups.push_back(line.substr(i + 1, j - i - 1));
        i = j + 1;
    }
    return groups;
}

bool parse_numbered_line(const std::string& line, GroupOutcome* out) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t digits = i;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits == i) return false;
    if (digits >= line.size() || (line[digits] != '.' && line[digits] != ')')) return false;
    std::string rest = util::trim(line.substr(digits + 1));
    if (rest.empty()) return false;
    if (!rest.empty() && rest.back() == '.') rest.pop_back();  // sentence-final period
    *out = parse_group_content(rest);
    out->shape = out->ok ? TripleShape::Numbered : out->shape;
    return true;
}

std::string dedup_key(const ontology::TypedTriple& t) {
    auto type_str = [](const std::optional<ontology::EntityType>& e) {
        return e ? std::string(ontology::entity_type_name(*e)) : std::string();
    };
    return t.head + '\x1f' + type_str(t.head_type) + '\x1f' + t.relation + '\x1f' + t.tail +
           '\x1f' + type_str(t.tail_type);
}

}  // namespace

ParseReport parse_triples(const std::string& raw) {
    ParseReport report;
    std::unordered_set<std::string> seen;

    std::vector<std::string> lines = util::split_lines(raw);
    for (size_t li = 0; li < lines.size(); ++li) {
        const int line_no = static_cast<int>(li) + 1;
        const std::string& line = lines[li];
        if (util::trim(line).empty()) continue;

        std::vector<GroupOutcome> outcomes;
        std::vector<std::string> groups = bracket_groups(line);
        if (!groups.empty()) {
            for (const std::string& g : groups) outcomes.push_back(parse_group_content(g));
        } else {
            GroupOutcome numbered;
            if (parse_numbered_line(line, &numbered)) outcomes.push_back(std::move(numbered));
        }

        int accepted = 0;
        std::string first_reason;
        for (GroupOutcome& o : outcomes) {
            for (const std::string& label : o.bad_type_labels)
                report.type_notes.push_back({line_no, label});
            if (!o.ok) {
                if (first_reason.empty()) first_reason = o.reject_reason;
                continue;
            }
            std::string key = dedup_key(o.triple);
            if (!seen.insert(key).second) continue;  // duplicate, keep first
            report.shape_stats[shape_name(o.shape)] += 1;
            report.parsed.push_back({std::move(o.triple), line_no, o.shape});
            ++accepted;
        }
        if (accepted == 0) {
            if (first_reason.empty()) first_reason = "no recognizable triple shape";
            report.rejected_lines.push_back({line_no, line, first_reason});
        }
    }
    return report;
}

std::vector<ontology::TypedTriple> canonicalize(std::vector<ontology::TypedTriple> triples) {
    for (ontology::TypedTriple& t : triples) {
        t.head = util::collapse_spaces(t.head);
        t.relation = util::collapse_spaces(t.relation);
        t.tail = util::collapse_spaces(t.tail);
    }
    // Dedup first (exact match, first occurrence wins), then sort.
    std::vector<ontology::TypedTriple> unique;
    std::unordered_set<std::string> seen;
    for (ontology::TypedTriple& t : triples)
        if (seen.insert(dedup_key(t)).second) unique.push_back(std::move(t));

    std::stable_sort(unique.begin(), unique.end(),
                     [](const ontology::TypedTriple& a, const ontology::TypedTriple& b) {
                         auto key = [](const ontology::TypedTriple& t) {
                             return std::make_tuple(util::to_lower(t.head),
                                                    util::to_lower(t.relation),
                                                    util::to_lower(t.tail));
                         };
                         return key(a) < key(b);
                     });
    return unique;
}

}  // namespace ctikg::parser
