#pragma once

#include "ctikg/ontology.hpp"

#include <map>
#include <string>
#include <vector>

namespace ctikg::parser {

enum class TripleShape { Bracketed, Quoted, Numbered, Typed };

std::string shape_name(TripleShape s);

struct ParsedTriple {
    ontology::TypedTriple triple;
    int line_no = 0;  // 1-based source line
    TripleShape shape = TripleShape::Bracketed;
};

struct RejectedLine {
    int line_no = 0;
    std::string line;
    std::string reason;
};

// A note that a type label inside a typed tuple did not parse; the triple is
// kept untyped.
struct TypeNote {
    int line_no = 0;
    std::string label;
};

struct ParseReport {
    std::vector<ParsedTriple> parsed;
    std::vector<RejectedLine> rejected_lines;
    std::vector<TypeNote> type_notes;
    std::map<std::string, int> shape_stats;

    std::vector<ontology::TypedTriple> triples() const;
};

// Tolerant parse of raw LLM output. Recognized shapes, in priority order:
// bracketed "[a, r, b]" runs, quoted "['a', 'r', 'b']", numbered-list lines
// "N. a, r, b", and typed "[a[T1], r, b[T2]]". Unknown relations are kept
// raw; validation is a separate pass. Duplicates keep the first occurrence.
ParseReport parse_triples(const std::string& raw);

// Trims, collapses whitespace runs, sorts case-insensitively by
// (head, relation, tail), removes exact duplicates.
std::vector<ontology::TypedTriple> canonicalize(std::vector<ontology::TypedTriple> triples);

}  // namespace ctikg::parser
