#pragma once

#include "ctikg/ontology.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctikg::kg {

// (head_id, rel_id, tail_id)
using IdTriple = std::array<int, 3>;

struct KgTriple {
    int head = 0;
    int rel = 0;
    int tail = 0;
    int count = 1;  // duplicates fold into this
    std::vector<ontology::Provenance> provenance;
};

struct KgStats {
    size_t entities = 0;
    size_t relations = 0;
    size_t triples = 0;  // distinct
    std::map<std::string, size_t> per_relation;
    std::map<int, size_t> degree_histogram;  // degree -> #entities

    std::string to_json() const;
};

struct LPSplit {
    std::vector<IdTriple> train;
    std::vector<IdTriple> valid;
    std::vector<IdTriple> test;
    uint64_t seed = 0;
};

struct MalformedLine : std::runtime_error {
    int line_no;
    MalformedLine(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_no(line) {}
};
struct UnsatisfiableSplit : std::runtime_error {
    UnsatisfiableSplit()
        : std::runtime_error("transductive repair emptied the validation or test split") {}
};

// Entity/relation indexed triple store. Entities dedup case-insensitively
// and keep the first-seen surface for display; ids are dense in first-seen
// order. Relations are indexed by their surface string (canonical camelCase
// when they come from the ontology).
class KnowledgeGraph {
public:
    static KnowledgeGraph build(const std::vector<ontology::TypedTriple>& triples);

    int add_entity(const std::string& surface);
    int add_relation(const std::string& name);
    void add_triple(int h, int r, int t,
                    const std::optional<ontology::Provenance>& prov = std::nullopt);

    size_t entity_count() const { return entity_display_.size(); }
    size_t relation_count() const { return relation_names_.size(); }
    size_t triple_count() const { return triples_.size(); }

    const std::string& entity_name(int id) const { return entity_display_.at(id); }
    const std::string& relation_name(int id) const { return relation_names_.at(id); }
    std::optional<int> find_entity(const std::string& surface) const;
    std::optional<int> find_relation(const std::string& name) const;
    const std::vector<KgTriple>& triples() const { return triples_; }
    const std::map<ontology::EntityType, int>& observed_types(int entity_id) const;

    KgStats stats() const;

    // Deterministic shuffle-and-split, then a repair pass that moves any
    // valid/test triple whose entity or relation is unseen in train back
    // into train.
    LPSplit split_for_lp(std::array<int, 3> ratios, uint64_t seed) const;

    // head TAB relation TAB tail, LF endings, no header. With types the
    // line carries two extra columns.
    void export_tsv(const std::string& path, bool with_types = false) const;
    static KnowledgeGraph import_tsv(const std::string& path);

    std::vector<IdTriple> id_triples() const;

private:
    std::vector<std::string> entity_display_;
    std::unordered_map<std::string, int> entity_by_key_;  // lowercase -> id
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, int> relation_by_name_;
    std::vector<KgTriple> triples_;
    std::map<std::array<int, 3>, size_t> triple_index_;
    std::vector<std::map<ontology::EntityType, int>> entity_types_;  // observed multiset
};

// Case-insensitive equality on entity surfaces, relation names, and the
// distinct triple set (counts and provenance ignored).
bool graphs_equal(const KnowledgeGraph& a, const KnowledgeGraph& b);

void save_id_triples_tsv(const std::string& path, const std::vector<IdTriple>& triples,
                         const KnowledgeGraph& kg);

}  // namespace ctikg::kg
