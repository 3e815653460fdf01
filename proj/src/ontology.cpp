#include "ctikg/ontology.hpp"

#include "ctikg/util.hpp"

#include <array>

namespace ctikg::ontology {

namespace {

constexpr std::array<std::string_view, kEntityTypeCount> kEntityNames = {
    "Malware",      "MalwareType", "Application", "OperatingSystem",
    "Organization", "Person",      "Time",        "ThreatActor",
    "Location",     "Indicator",   "AttackPattern",
};

constexpr std::array<std::string_view, kRelationTypeCount> kRelationNames = {
    "isA",       "targets",      "uses",     "hasAuthor", "hasAlias",
    "indicates", "discoveredIn", "exploits", "variantOf", "has",
};

// Lowercased, whitespace stripped. "Malware Type" and "MalwareType" collide
// on purpose; the paper uses both spellings.
std::string normalize_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    for (char c : label) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

std::string_view entity_type_name(EntityType t) {
    return kEntityNames[static_cast<size_t>(t)];
}

std::string_view relation_name(RelationType r) {
    return kRelationNames[static_cast<size_t>(r)];
}

std::optional<EntityType> try_parse_entity_type(std::string_view label) {
    const std::string key = normalize_label(label);
    for (size_t i = 0; i < kEntityNames.size(); ++i)
        if (key == normalize_label(kEntityNames[i])) return static_cast<EntityType>(i);
    return std::nullopt;
}

EntityType parse_entity_type(std::string_view label) {
    if (auto t = try_parse_entity_type(label)) return *t;
    throw UnknownEntityType(std::string(label));
}

std::optional<RelationType> try_parse_relation(std::string_view label) {
    const std::string key = util::to_lower(util::trim(label));
    for (size_t i = 0; i < kRelationNames.size(); ++i)
        if (key == util::to_lower(kRelationNames[i])) return static_cast<RelationType>(i);
    return std::nullopt;
}

RelationType parse_relation(std::string_view label) {
    if (auto r = try_parse_relation(label)) return *r;
    throw UnknownRelation(std::string(label));
}

std::vector<EntityType> all_entity_types() {
    std::vector<EntityType> out;
    for (int i = 0; i < kEntityTypeCount; ++i) out.push_back(static_cast<EntityType>(i));
    return out;
}

std::vector<RelationType> all_relation_types() {
    std::vector<RelationType> out;
    for (int i = 0; i < kRelationTypeCount; ++i) out.push_back(static_cast<RelationType>(i));
    return out;
}

std::string format_triple(const TypedTriple& t) {
    std::string out = "[";
    out += t.head;
    if (t.head_type) {
        out += "[";
        out += entity_type_name(*t.head_type);
        out += "]";
    }
    out += ", ";
    out += t.relation;
    out += ", ";
    out += t.tail;
    if (t.tail_type) {
        out += "[";
        out += entity_type_name(*t.tail_type);
        out += "]";
    }
    out += "]";
    return out;
}

OntologySchema OntologySchema::unconstrained() {
    OntologySchema s;
    for (auto t : all_entity_types()) s.entity_types.insert(t);
    for (auto r : all_relation_types()) s.relation_types.insert(r);
    return s;
}

OntologySchema OntologySchema::standard() {
    OntologySchema s = unconstrained();
    // discoveredIn: one participant must be Time-typed.
    std::vector<TypePattern>& disc = s.relation_constraints[RelationType::discoveredIn];
    disc.push_back({std::nullopt, EntityType::Time});
    disc.push_back({EntityType::Time, std::nullopt});
    // hasAuthor: tail must be a Person, ThreatActor, or Organization.
    std::vector<TypePattern>& auth = s.relation_constraints[RelationType::hasAuthor];
    auth.push_back({std::nullopt, EntityType::Person});
    auth.push_back({std::nullopt, EntityType::ThreatActor});
    auth.push_back({std::nullopt, EntityType::Organization});
    return s;
}

OntologySchema OntologySchema::from_config_text(const std::string& text) {
    OntologySchema s;
    for (const std::string& raw_line : util::split_lines(text)) {
        std::string line = util::trim(raw_line);
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("schema config: expected `key = value`, got: " + line);
        std::string key = util::trim(line.substr(0, eq));
        std::string value = util::trim(line.substr(eq + 1));

        auto split_list = [](const std::string& v) {
            std::vector<std::string> items;
            size_t start = 0;
            while (start <= v.size()) {
                size_t comma = v.find(',', start);
                if (comma == std::string::npos) {
                    items.push_back(util::trim(v.substr(start)));
                    break;
                }
                items.push_back(util::trim(v.substr(start, comma - start)));
                start = comma + 1;
            }
            return items;
        };

        if (key == "entity_types") {
            for (const auto& item : split_list(value))
                if (!item.empty()) s.entity_types.insert(parse_entity_type(item));
        } else if (key == "relation_types") {
            for (const auto& item : split_list(value))
                if (!item.empty()) s.relation_types.insert(parse_relation(item));
        } else if (key == "require_types") {
            s.require_types = (value == "true" || value == "1" || value == "yes");
        } else if (key == "constraint") {
            auto parts = split_list(value);
            if (parts.size() != 3)
                throw std::runtime_error("schema config: constraint needs 3 fields: " + line);
            RelationType rel = parse_relation(parts[0]);
            TypePattern pat;
            if (parts[1] != "*") pat.head = parse_entity_type(parts[1]);
            if (parts[2] != "*") pat.tail = parse_entity_type(parts[2]);
            s.relation_constraints[rel].push_back(pat);
        } else {
            throw std::runtime_error("schema config: unknown key: " + key);
        }
    }
    // Constraints may only mention declared types.
    for (const auto& [rel, pats] : s.relation_constraints) {
        if (!s.relation_types.count(rel))
            throw std::runtime_error("schema config: constraint on undeclared relation");
        for (const auto& p : pats) {
            if (p.head && !s.entity_types.count(*p.head))
                throw std::runtime_error("schema config: constraint mentions undeclared type");
            if (p.tail && !s.entity_types.count(*p.tail))
                throw std::runtime_error("schema config: constraint mentions undeclared type");
        }
    }
    return s;
}

OntologySchema OntologySchema::from_file(const std::string& path) {
    return from_config_text(util::read_file(path));
}

ValidationResult validate_triple(const TypedTriple& t, const OntologySchema& schema) {
    ValidationResult result;
    auto fail = [&](ViolationKind kind, std::string detail) {
        result.valid = false;
        result.violations.push_back({kind, std::move(detail)});
    };

    std::optional<RelationType> rel = t.relation_type();
    if (!rel || !schema.relation_types.count(*rel))
        fail(ViolationKind::UnknownRelation, t.relation);

    if (t.head_type && !schema.entity_types.count(*t.head_type))
        fail(ViolationKind::UnknownEntityType, std::string(entity_type_name(*t.head_type)));
    if (t.tail_type && !schema.entity_types.count(*t.tail_type))
        fail(ViolationKind::UnknownEntityType, std::string(entity_type_name(*t.tail_type)));

    if (schema.require_types && !t.typed())
        fail(ViolationKind::UntypedWhenTypesRequired, format_triple(t));

    // Constraint patterns only apply when the relation is known and the
    // triple carries types; an untyped triple cannot violate a pair table.
    if (rel && t.typed()) {
        auto it = schema.relation_constraints.find(*rel);
        if (it != schema.relation_constraints.end() && !it->second.empty()) {
            bool ok = false;
            for (const TypePattern& p : it->second) {
                bool head_ok = !p.head || *p.head == *t.head_type;
                bool tail_ok = !p.tail || *p.tail == *t.tail_type;
                if (head_ok && tail_ok) {
                    ok = true;
                    break;
                }
            }
            if (!ok)
                fail(ViolationKind::ConstraintViolation,
                     std::string(entity_type_name(*t.head_type)) + ", " +
                         std::string(relation_name(*rel)) + ", " +
                         std::string(entity_type_name(*t.tail_type)));
        }
    }
    return result;
}

}  // namespace ctikg::ontology
