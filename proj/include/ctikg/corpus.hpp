#pragma once

#include "ctikg/ontology.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctikg::corpus {

struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> source_uri;
};

struct Paragraph {
    std::string doc_id;
    int index = 0;  // ordinal within document
    std::string text;
    int token_count = 0;
    bool oversized = false;  // single sentence that exceeded the budget
};

struct AnnotatedExample {
    Paragraph paragraph;
    std::vector<ontology::TypedTriple> reference_triples;
};

struct DatasetSplit {
    std::vector<AnnotatedExample> train;
    std::vector<AnnotatedExample> validation;
    std::vector<AnnotatedExample> test;
    uint64_t seed = 0;
};

struct InvalidBudget : std::runtime_error {
    InvalidBudget() : std::runtime_error("chunk budget must be >= 1") {}
};

// Token counting is a pluggable interface; subword tokenizers are model
// specific, so the default is a documented heuristic.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual int count(std::string_view text) const = 0;
};

// ceil(whitespace-delimited words * 4/3), an approximation of subword rates.
class HeuristicTokenizer : public Tokenizer {
public:
    int count(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

int count_tokens(std::string_view text, const Tokenizer& tok = default_tokenizer());

// Splits on blank lines into natural paragraphs, greedily packs consecutive
// ones under the budget; an over-budget natural paragraph is split on
// sentence boundaries, and a single over-budget sentence becomes one
// oversized chunk.
std::vector<Paragraph> chunk_document(const Document& doc, int max_tokens,
                                      const Tokenizer& tok = default_tokenizer());

// Attaches a triple to a paragraph iff both head and tail occur
// case-insensitively in the paragraph text. Paragraphs with no matching
// triple are dropped. Triples with provenance only match paragraphs of the
// same document.
std::vector<AnnotatedExample> match_annotations(const std::vector<Paragraph>& paragraphs,
                                                const std::vector<ontology::TypedTriple>& triples);

// Deterministic shuffle under `seed`, then largest-remainder apportionment
// of floor(N*r/100) counts so the split always partitions the input
// (80:16:4 over 718 gives 574/115/29).
DatasetSplit split_dataset(const std::vector<AnnotatedExample>& examples,
                           std::array<int, 3> ratio, uint64_t seed);

std::array<size_t, 3> split_counts(size_t n, std::array<int, 3> ratio);

// Corpus IO: a directory of UTF-8 .txt files (one document each, id = stem)
// or a JSON-Lines file of {id, text, source_uri}.
std::vector<Document> load_documents(const std::string& path);
std::vector<ontology::TypedTriple> load_triples_jsonl(const std::string& path);
void save_triples_jsonl(const std::string& path,
                        const std::vector<ontology::TypedTriple>& triples);
std::vector<Paragraph> load_paragraphs_jsonl(const std::string& path);
void save_paragraphs_jsonl(const std::string& path, const std::vector<Paragraph>& paragraphs);

}  // namespace ctikg::corpus
