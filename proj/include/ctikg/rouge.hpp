#pragma once

#include "ctikg/ontology.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ctikg::rouge {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct InvalidN : std::runtime_error {
    InvalidN() : std::runtime_error("rouge n must be >= 1") {}
};
struct EmptyInput : std::runtime_error {
    EmptyInput() : std::runtime_error("cannot aggregate an empty score list") {}
};

// Case-insensitive tokenization: lowercase, split on runs of
// non-alphanumeric characters, drop empties.
std::vector<std::string> tokenize(std::string_view text);

// ROUGE-N with multiset clipping: a candidate n-gram matches at most its
// multiplicity in the reference. Zero-denominator cases score 0.
RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n);

// ROUGE-L over the longest common subsequence (in-sequence, not necessarily
// consecutive matches).
RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference);

struct ExtractionScores {
    std::map<int, RougeScore> by_n;
    RougeScore lcs;
};

// Canonicalizes both triple lists, joins each into one sorted text, and
// scores. An empty candidate against a non-empty reference scores 0.
ExtractionScores evaluate_extraction(const std::vector<ontology::TypedTriple>& candidate,
                                     const std::vector<ontology::TypedTriple>& reference,
                                     const std::set<int>& ns = {1, 2, 3, 6});

// Arithmetic mean per metric (mean-of-F1; see aggregate_f1_of_means for the
// alternative reading).
ExtractionScores aggregate(const std::vector<ExtractionScores>& scores);
ExtractionScores aggregate_f1_of_means(const std::vector<ExtractionScores>& scores);

std::string triples_to_eval_text(const std::vector<ontology::TypedTriple>& triples);

}  // namespace ctikg::rouge
