#pragma once

#include "ctikg/ontology.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ctikg::postprocess {

using Triples = std::vector<ontology::TypedTriple>;

// A filter is prepared against the full input (corpus-wide rules need one
// counting pass) and then applied as a keep/drop predicate per triple.
struct FilterRule {
    std::string name;
    bool pointwise = true;
    std::function<std::function<bool(const ontology::TypedTriple&)>(const Triples&)> prepare;
};

struct RuleReport {
    std::string rule;
    size_t input_count = 0;
    size_t removed_count = 0;
    Triples sample_removed;  // capped
};

struct FilterReport {
    std::vector<RuleReport> rules;
    size_t final_count = 0;

    std::string to_json() const;
    std::string to_table() const;
};

// Keeps triples that validate against the schema.
FilterRule make_ontology_filter(ontology::OntologySchema schema);

// discoveredIn triples must carry a recognizable date (four-digit year,
// month-name + day or year, dd/mm/yyyy, dd.mm.yyyy) on the Time-typed
// participant (tail when untyped).
FilterRule make_discovered_in_date_filter();

// Drops triples whose head is only digits, punctuation, and whitespace.
FilterRule make_numeric_subject_filter();

// Drops triples referencing a Malware-typed entity mentioned fewer than
// `min_mentions` times corpus-wide. Counts distinct documents when
// provenance is present, triple occurrences otherwise.
FilterRule make_rare_malware_filter(int min_mentions = 5);

// Malware/ThreatActor entities must look like names: at least one uppercase
// letter or digit, and no leading lowercase determiner.
FilterRule make_non_named_filter();

// The five rules above in their default order (pointwise rules first,
// corpus-dependent rare-malware last).
std::vector<FilterRule> default_pipeline(ontology::OntologySchema schema, int min_mentions = 5);

FilterRule rule_by_name(const std::string& name, const ontology::OntologySchema& schema,
                        int min_mentions);

std::pair<Triples, FilterReport> run_pipeline(const Triples& triples,
                                              const std::vector<FilterRule>& rules);

// Exposed for the date-filter tests.
bool contains_date_token(const std::string& text);
bool is_named_entity(const std::string& text);

}  // namespace ctikg::postprocess
