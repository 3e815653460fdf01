#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ctikg::ontology {

// The CTI ontology: 11 entity types and 10 relation types.
enum class EntityType {
    Malware,
    MalwareType,
    Application,
    OperatingSystem,
    Organization,
    Person,
    Time,
    ThreatActor,
    Location,
    Indicator,
    AttackPattern,
};
inline constexpr int kEntityTypeCount = 11;

enum class RelationType {
    isA,
    targets,
    uses,
    hasAuthor,
    hasAlias,
    indicates,
    discoveredIn,
    exploits,
    variantOf,
    has,
};
inline constexpr int kRelationTypeCount = 10;

struct UnknownEntityType : std::runtime_error {
    explicit UnknownEntityType(const std::string& label)
        : std::runtime_error("unknown entity type: " + label) {}
};
struct UnknownRelation : std::runtime_error {
    explicit UnknownRelation(const std::string& label)
        : std::runtime_error("unknown relation: " + label) {}
};

// Canonical surface spellings ("OperatingSystem" has no space).
std::string_view entity_type_name(EntityType t);
std::string_view relation_name(RelationType r);

// Case- and space-insensitive ("Operating System" == "operatingsystem").
EntityType parse_entity_type(std::string_view label);
std::optional<EntityType> try_parse_entity_type(std::string_view label);

// Case-insensitive.
RelationType parse_relation(std::string_view label);
std::optional<RelationType> try_parse_relation(std::string_view label);

std::vector<EntityType> all_entity_types();
std::vector<RelationType> all_relation_types();

struct Provenance {
    std::string doc_id;
    int paragraph_index = 0;
    bool operator==(const Provenance&) const = default;
};

// The KG atom. `relation` keeps the raw surface string so that invented
// relations survive parsing and can be judged later by validation.
struct TypedTriple {
    std::string head;
    std::optional<EntityType> head_type;
    std::string relation;
    std::string tail;
    std::optional<EntityType> tail_type;
    std::optional<Provenance> provenance;

    bool typed() const { return head_type.has_value() && tail_type.has_value(); }
    std::optional<RelationType> relation_type() const { return try_parse_relation(relation); }

    bool operator==(const TypedTriple& o) const {
        return head == o.head && head_type == o.head_type && relation == o.relation &&
               tail == o.tail && tail_type == o.tail_type;
    }
};

// "[head, relation, tail]" or "[head[Type], relation, tail[Type]]".
std::string format_triple(const TypedTriple& t);

enum class ViolationKind {
    UnknownRelation,
    UnknownEntityType,
    UntypedWhenTypesRequired,
    ConstraintViolation,
};

struct Violation {
    ViolationKind kind;
    std::string detail;
};

struct ValidationResult {
    bool valid = true;
    std::vector<Violation> violations;
};

// Allowed (head_type, tail_type) pattern; nullopt is a wildcard.
struct TypePattern {
    std::optional<EntityType> head;
    std::optional<EntityType> tail;
};

struct OntologySchema {
    std::set<EntityType> entity_types;
    std::set<RelationType> relation_types;
    std::map<RelationType, std::vector<TypePattern>> relation_constraints;
    bool require_types = false;

    // All 11 entity types, all 10 relations, and the default constraint table:
    // discoveredIn requires a Time-typed participant; hasAuthor requires a
    // tail typed Person, ThreatActor, or Organization.
    static OntologySchema standard();

    // Everything declared, no constraints.
    static OntologySchema unconstrained();

    // Key-value config: entity_types, relation_types, require_types, and
    // repeated `constraint = relation, head|*, tail|*` lines.
    static OntologySchema from_file(const std::string& path);
    static OntologySchema from_config_text(const std::string& text);
};

ValidationResult validate_triple(const TypedTriple& t, const OntologySchema& schema);

}  // namespace ctikg::ontology
