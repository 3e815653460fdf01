#include "ctikg/postprocess.hpp"

#include "ctikg/util.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <map>
#include <memory>
#include <regex>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

using json = nlohmann::json;

namespace ctikg::postprocess {

namespace {

constexpr size_t kSampleCap = 5;

using ontology::EntityType;
using ontology::TypedTriple;

const std::regex& year_re() {
    static const std::regex re(R"((^|\D)(1\d{3}|2\d{3})(\D|$))");
    return re;
}

const std::regex& month_re() {
    static const std::regex re(
        R"((\b(january|february|march|april|may|june|july|august|september|october|november|december|jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec)\b\s*\.?\s*\d{1,2})|(\b\d{1,2}\s*(st|nd|rd|th)?\s+(january|february|march|april|may|june|july|august|september|october|november|december|jan|feb|mar|apr|jun|jul|aug|sept|sep|oct|nov|dec)\b))",
        std::regex::icase);
    return re;
}

const std::regex& numeric_date_re() {
    static const std::regex re(R"(\b\d{1,2}[/.]\d{1,2}[/.]\d{2,4}\b)");
    return re;
}

}  // namespace

bool contains_date_token(const std::string& text) {
    return std::regex_search(text, year_re()) || std::regex_search(text, month_re()) ||
           std::regex_search(text, numeric_date_re());
}

bool is_named_entity(const std::string& text) {
    const std::string t = util::trim(text);
    if (t.empty()) return false;
    bool has_upper_or_digit = false;
    for (char c : t) {
        if (std::isupper(static_cast<unsigned char>(c)) ||
            std::isdigit(static_cast<unsigned char>(c))) {
            has_upper_or_digit = true;
            break;
        }
    }
    if (!has_upper_or_digit) return false;
    // Leading lowercase determiner ("the malware", "a trojan", ...).
    size_t sp = t.find(' ');
    std::string first = sp == std::string::npos ? t : t.substr(0, sp);
    static const std::set<std::string> determiners = {"the", "a", "an", "this", "it"};
    if (determiners.count(first)) return false;
    return true;
}

FilterRule make_ontology_filter(ontology::OntologySchema schema) {
    FilterRule rule;
    rule.name = "ontology";
    rule.prepare = [schema = std::make_shared<ontology::OntologySchema>(std::move(schema))](
                       const Triples&) {
        return [schema](const TypedTriple& t) {
            return ontology::validate_triple(t, *schema).valid;
        };
    };
    return rule;
}

FilterRule make_discovered_in_date_filter() {
    FilterRule rule;
    rule.name = "discovered_in_date";
    rule.prepare = [](const Triples&) {
        return [](const TypedTriple& t) {
            auto rel = t.relation_type();
            if (!rel || *rel != ontology::RelationType::discoveredIn) return true;
            // Check the Time-typed participant wherever it sits; fall back
            // to the tail, where dates appear in practice.
            if (t.head_type == EntityType::Time && t.tail_type != EntityType::Time)
                return contains_date_token(t.head);
            return contains_date_token(t.tail);
        };
    };
    return rule;
}

FilterRule make_numeric_subject_filter() {
    FilterRule rule;
    rule.name = "numeric_subjects";
    rule.prepare = [](const Triples&) {
        return [](const TypedTriple& t) {
            const std::string h = util::trim(t.head);
            if (h.empty()) return false;
            for (char c : h) {
                unsigned char u = static_cast<unsigned char>(c);
                if (!std::isdigit(u) && !std::ispunct(u) && !std::isspace(u))
                    return true;  // contains a letter-ish character
            }
            return false;
        };
    };
    return rule;
}

FilterRule make_rare_malware_filter(int min_mentions) {
    if (min_mentions < 1) throw std::runtime_error("min_mentions must be >= 1");
    FilterRule rule;
    rule.name = "rare_malware";
    rule.pointwise = false;
    rule.prepare = [min_mentions](const Triples& corpus) {
        // Mention count per lowercased Malware surface. With provenance the
        // unit is distinct documents; each unprovenanced occurrence counts
        // as its own unit.
        std::map<std::string, std::set<std::string>> units;
        size_t anon = 0;
        auto add = [&](const std::string& surface, const std::optional<ontology::Provenance>& prov) {
            std::string key = util::to_lower(util::trim(surface));
            units[key].insert(prov ? "doc:" + prov->doc_id : "anon:" + std::to_string(anon++));
        };
        for (const TypedTriple& t : corpus) {
            if (t.head_type == EntityType::Malware) add(t.head, t.provenance);
            if (t.tail_type == EntityType::Malware) add(t.tail, t.provenance);
        }
        auto counts = std::make_shared<std::map<std::string, int>>();
        for (const auto& [key, docs] : units) (*counts)[key] = static_cast<int>(docs.size());
        return [counts, min_mentions](const TypedTriple& t) {
            auto rare = [&](const std::string& surface) {
                auto it = counts->find(util::to_lower(util::trim(surface)));
                return it != counts->end() && it->second < min_mentions;
            };
            if (t.head_type == EntityType::Malware && rare(t.head)) return false;
            if (t.tail_type == EntityType::Malware && rare(t.tail)) return false;
            return true;
        };
    };
    return rule;
}

FilterRule make_non_named_filter() {
    FilterRule rule;
    rule.name = "non_named";
    rule.prepare = [](const Triples&) {
        return [](const TypedTriple& t) {
            auto needs_name = [](const std::optional<EntityType>& type) {
                return type == EntityType::Malware || type == EntityType::ThreatActor;
            };
            if (needs_name(t.head_type) && !is_named_entity(t.head)) return false;
            if (needs_name(t.tail_type) && !is_named_entity(t.tail)) return false;
            return true;
        };
    };
    return rule;
}

std::vector<FilterRule> default_pipeline(ontology::OntologySchema schema, int min_mentions) {
    std::vector<FilterRule> rules;
    rules.push_back(make_ontology_filter(std::move(schema)));
    rules.push_back(make_discovered_in_date_filter());
    rules.push_back(make_numeric_subject_filter());
    rules.push_back(make_non_named_filter());
    rules.push_back(make_rare_malware_filter(min_mentions));  // corpus-wide; runs last
    return rules;
}

FilterRule rule_by_name(const std::string& name, const ontology::OntologySchema& schema,
                        int min_mentions) {
    if (name == "ontology") return make_ontology_filter(schema);
    if (name == "discovered_in_date") return make_discovered_in_date_filter();
    if (name == "numeric_subjects") return make_numeric_subject_filter();
    if (name == "rare_malware") return make_rare_malware_filter(min_mentions);
    if (name == "non_named") return make_non_named_filter();
    throw std::runtime_error("unknown filter rule: " + name);
}

std::pair<Triples, FilterReport> run_pipeline(const Triples& triples,
                                              const std::vector<FilterRule>& rules) {
    Triples current = triples;
    FilterReport report;
    for (const FilterRule& rule : rules) {
        auto keep = rule.prepare(current);
        const int n = static_cast<int>(current.size());
        std::vector<char> keep_flags(n, 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int i = 0; i < n; ++i) keep_flags[i] = keep(current[i]) ? 1 : 0;

        RuleReport rr;
        rr.rule = rule.name;
        rr.input_count = current.size();
        Triples survivors;
        survivors.reserve(current.size());
        for (int i = 0; i < n; ++i) {
            if (keep_flags[i]) {
                survivors.push_back(std::move(current[i]));
            } else {
                ++rr.removed_count;
                if (rr.sample_removed.size() < kSampleCap)
                    rr.sample_removed.push_back(current[i]);
            }
        }
        current = std::move(survivors);
        report.rules.push_back(std::move(rr));
    }
    report.final_count = current.size();
    return {std::move(current), std::move(report)};
}

std::string FilterReport::to_json() const {
    json j;
    j["final_count"] = final_count;
    j["rules"] = json::array();
    for (const RuleReport& r : rules) {
        json jr;
        jr["rule"] = r.rule;
        jr["input_count"] = r.input_count;
        jr["removed_count"] = r.removed_count;
        jr["sample_removed"] = json::array();
        for (const auto& t : r.sample_removed)
            jr["sample_removed"].push_back(ontology::format_triple(t));
        j["rules"].push_back(std::move(jr));
    }
    return j.dump(2);
}

std::string FilterReport::to_table() const {
    std::ostringstream out;
    out << "rule                   input   removed  survivors\n";
    for (const RuleReport& r : rules) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-22s %7zu %9zu %10zu\n", r.rule.c_str(),
                      r.input_count, r.removed_count, r.input_count - r.removed_count);
        out << buf;
    }
    out << "final: " << final_count << " triples\n";
    return out.str();
}

}  // namespace ctikg::postprocess
