#include "ctikg/postprocess.hpp"

#include "ctikg/util.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>

using namespace ctikg;
using namespace ctikg::postprocess;
using ontology::EntityType;
using ontology::TypedTriple;

namespace {

TypedTriple t3(const std::string& h, const std::string& r, const std::string& t) {
    TypedTriple out;
    out.head = h;
    out.relation = r;
    out.tail = t;
    return out;
}

TypedTriple typed(const std::string& h, EntityType ht, const std::string& r,
                  const std::string& t, EntityType tt) {
    TypedTriple out = t3(h, r, t);
    out.head_type = ht;
    out.tail_type = tt;
    return out;
}

Triples apply(const FilterRule& rule, const Triples& in) {
    return run_pipeline(in, {rule}).first;
}

}  // namespace

TEST_CASE("ontology filter keeps valid triples only") {
    auto rule = make_ontology_filter(ontology::OntologySchema::standard());
    Triples in = {
        t3("A", "hostedOn", "B"),
        typed("Adwind", EntityType::Malware, "targets", "US", EntityType::Location),
    };
    auto out = apply(rule, in);
    REQUIRE(out.size() == 1);
    CHECK(out[0].head == "Adwind");

    CHECK(apply(rule, {}).empty());
}

TEST_CASE("date recognizer fixture list") {
    // Hand-labeled date strings.
    const std::vector<std::pair<std::string, bool>> cases = {
        {"July 22, 2014", true},
        {"2019", true},
        {"in 2016", true},
        {"22/07/2014", true},
        {"22.07.14", true},
        {"July 22", true},
        {"5 March", true},
        {"March 2021", true},
        {"recently", false},
        {"last week", false},
        {"soon", false},
        {"the nineties", false},
        {"version 12", false},
        {"July", false},        // month alone is not a date
        {"123456", false},      // digit run, no year shape
        {"port 8080", false},
    };
    for (const auto& [text, expected] : cases) {
        CAPTURE(text);
        CHECK(contains_date_token(text) == expected);
    }
}

TEST_CASE("discoveredIn requires a date on the Time participant") {
    auto rule = make_discovered_in_date_filter();
    Triples in = {
        typed("Operation Emmental", EntityType::ThreatActor, "discoveredIn", "July 22, 2014",
              EntityType::Time),
        typed("X", EntityType::Malware, "discoveredIn", "recently", EntityType::Time),
        typed("X", EntityType::Malware, "discoveredIn", "2019", EntityType::Time),
        // Date sits in the head: rule follows the Time-typed participant.
        typed("March 2020", EntityType::Time, "discoveredIn", "CovidLock", EntityType::Malware),
        // Unrelated relations pass untouched.
        t3("X", "targets", "whenever"),
    };
    auto out = apply(rule, in);
    REQUIRE(out.size() == 4);
    CHECK(out[0].tail == "July 22, 2014");
    CHECK(out[1].tail == "2019");
    CHECK(out[2].head == "March 2020");
    CHECK(out[3].relation == "targets");
}

TEST_CASE("numeric subjects are removed") {
    auto rule = make_numeric_subject_filter();
    Triples in = {
        t3("124", "indicates", "Android"),
        t3("Adwind 2", "targets", "US"),
        t3("+44113320****", "indicates", "Phone Numbers"),
        t3("12.34.56.78", "indicates", "C2"),
        t3("CVE-2021-1234", "exploits", "Android"),  // has letters, kept
    };
    auto out = apply(rule, in);
    REQUIRE(out.size() == 3);
    CHECK(out[0].head == "Adwind 2");
    CHECK(out[1].head == "CVE-2021-1234");
    CHECK(out[2].head == "CVE-2021-1234");
}

TEST_CASE("named-entity heuristic on a hand-labeled list") {
    const std::vector<std::pair<std::string, bool>> cases = {
        {"FakeSpy", true},    {"Adwind", true},       {"APT28", true},
        {"NSO Group", true},  {"Lazarus Group", true},{"SpyNote", true},
        {"Twitoor", true},    {"Operation Emmental", true},
        {"WannaCry 2.0", true}, {"x86 loader", true},
        {"ZeuS", true},       {"DarkComet RAT", true},
        {"Agent Tesla", true},{"njRAT", true},        {"8220 Gang", true},
        {"the malware", false}, {"a trojan", false},  {"an attacker", false},
        {"this campaign", false}, {"it", false},
        {"malware", false},   {"ransomware", false},  {"spyware strain", false},
        {"the Trojan", false},  // leading determiner loses even with a capital
        {"unknown actor", false}, {"some group", false},
        {"virus", false},     {"backdoor", false},    {"worm", false},
        {"", false},
    };
    for (const auto& [text, expected] : cases) {
        CAPTURE(text);
        CHECK(is_named_entity(text) == expected);
    }
}

TEST_CASE("non-named filter applies to Malware and ThreatActor types only") {
    auto rule = make_non_named_filter();
    Triples in = {
        typed("the malware", EntityType::Malware, "targets", "US", EntityType::Location),
        typed("FakeSpy", EntityType::Malware, "targets", "Android",
              EntityType::OperatingSystem),
        // Untyped heads are not judged.
        t3("the malware", "targets", "US"),
        // Non-Malware types are not judged either.
        typed("the bank", EntityType::Organization, "targets", "users", EntityType::Person),
    };
    auto out = apply(rule, in);
    REQUIRE(out.size() == 3);
    CHECK(out[0].head == "FakeSpy");
}

TEST_CASE("rare malware filter counts mentions corpus-wide and case-insensitively") {
    Triples in;
    for (int i = 0; i < 4; ++i)
        in.push_back(typed(i % 2 ? "rarebug" : "RareBug", EntityType::Malware, "targets",
                           "host" + std::to_string(i), EntityType::Application));
    for (int i = 0; i < 7; ++i)
        in.push_back(typed("Adwind", EntityType::Malware, "targets", "t" + std::to_string(i),
                           EntityType::Application));

    auto removed_at_5 = apply(make_rare_malware_filter(5), in);
    CHECK(removed_at_5.size() == 7);  // the 4 RareBug triples are gone
    for (const auto& t : removed_at_5) CHECK(t.head == "Adwind");

    auto kept_at_4 = apply(make_rare_malware_filter(4), in);
    CHECK(kept_at_4.size() == 11);
}

TEST_CASE("rare malware counts tails and distinct documents when provenance exists") {
    Triples in;
    // Same malware mentioned in 2 distinct documents across 6 triples.
    for (int i = 0; i < 6; ++i) {
        auto t = typed("Host" + std::to_string(i), EntityType::Application, "uses", "DupWorm",
                       EntityType::Malware);
        t.provenance = ontology::Provenance{i % 2 ? "docA" : "docB", i};
        in.push_back(t);
    }
    auto out = apply(make_rare_malware_filter(3), in);
    CHECK(out.empty());  // 2 documents < 3
    CHECK(apply(make_rare_malware_filter(2), in).size() == 6);
}

TEST_CASE("rare malware filter agrees with a brute-force oracle") {
    util::Rng rng(41);
    Triples in;
    for (int i = 0; i < 200; ++i) {
        auto name = "M" + std::to_string(rng.next_below(12));
        auto t = typed(name, EntityType::Malware, "targets",
                       "T" + std::to_string(rng.next_below(30)), EntityType::Application);
        in.push_back(t);
    }
    const int threshold = 8;
    auto out = apply(make_rare_malware_filter(threshold), in);

    std::map<std::string, int> counts;
    for (const auto& t : in) counts[util::to_lower(t.head)] += 1;
    Triples oracle;
    for (const auto& t : in)
        if (counts[util::to_lower(t.head)] >= threshold) oracle.push_back(t);
    REQUIRE(out.size() == oracle.size());
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == oracle[i]);
}

TEST_CASE("run_pipeline chains rules and the report counts balance") {
    ontology::OntologySchema schema = ontology::OntologySchema::standard();
    Triples in = {
        typed("Adwind", EntityType::Malware, "targets", "US", EntityType::Location),
        typed("Adwind", EntityType::Malware, "targets", "retail", EntityType::Location),
        typed("Adwind", EntityType::Malware, "targets", "hospitality", EntityType::Location),
        typed("Adwind", EntityType::Malware, "targets", "petroleum", EntityType::Location),
        typed("Adwind", EntityType::Malware, "targets", "Japan", EntityType::Location),
        t3("124", "indicates", "Android"),
        t3("A", "hostedOn", "B"),
        typed("the malware", EntityType::Malware, "uses", "obfuscation",
              EntityType::AttackPattern),
        typed("RareBug", EntityType::Malware, "targets", "Austria", EntityType::Location),
        typed("X", EntityType::Malware, "discoveredIn", "recently", EntityType::Time),
    };
    auto rules = default_pipeline(schema, 5);
    auto [survivors, report] = run_pipeline(in, rules);

    // Manual sequential application oracle.
    Triples manual = in;
    for (const auto& rule : rules) manual = apply(rule, manual);
    REQUIRE(survivors.size() == manual.size());
    for (size_t i = 0; i < survivors.size(); ++i) CHECK(survivors[i] == manual[i]);

    // Only the 5 Adwind triples survive (Adwind has 5 mentions >= threshold).
    CHECK(survivors.size() == 5);

    REQUIRE(report.rules.size() == rules.size());
    CHECK(report.rules[0].input_count == in.size());
    for (size_t i = 0; i + 1 < report.rules.size(); ++i)
        CHECK(report.rules[i].input_count - report.rules[i].removed_count ==
              report.rules[i + 1].input_count);
    CHECK(report.final_count == survivors.size());
}

TEST_CASE("empty rule list is the identity") {
    Triples in = {t3("a", "isA", "b")};
    auto [out, report] = run_pipeline(in, {});
    CHECK(out.size() == 1);
    CHECK(report.final_count == 1);
    CHECK(report.rules.empty());
}

TEST_CASE("filters are contractions and idempotent on their own output") {
    util::Rng rng(43);
    Triples in;
    const char* heads[] = {"Adwind", "the malware", "124", "FakeSpy", "recently"};
    const char* rels[] = {"targets", "hostedOn", "discoveredIn", "indicates"};
    for (int i = 0; i < 120; ++i) {
        auto t = t3(heads[rng.next_below(5)], rels[rng.next_below(4)],
                    "tail" + std::to_string(rng.next_below(6)));
        if (rng.next_below(2)) {
            t.head_type = static_cast<EntityType>(rng.next_below(11));
            t.tail_type = static_cast<EntityType>(rng.next_below(11));
        }
        in.push_back(t);
    }
    auto rules = default_pipeline(ontology::OntologySchema::standard(), 3);
    for (const auto& rule : rules) {
        auto once = apply(rule, in);
        CHECK(once.size() <= in.size());
        auto twice = apply(rule, once);
        REQUIRE(twice.size() == once.size());
        for (size_t i = 0; i < once.size(); ++i) CHECK(once[i] == twice[i]);
    }
}

TEST_CASE("pointwise filters commute pairwise") {
    util::Rng rng(47);
    Triples in;
    const char* heads[] = {"Adwind", "the malware", "124", "FakeSpy"};
    for (int i = 0; i < 80; ++i) {
        auto t = t3(heads[rng.next_below(4)],
                    rng.next_below(2) ? "targets" : "discoveredIn",
                    rng.next_below(2) ? "2019" : "recently");
        if (rng.next_below(2)) {
            t.head_type = static_cast<EntityType>(rng.next_below(11));
            t.tail_type = static_cast<EntityType>(rng.next_below(11));
        }
        in.push_back(t);
    }
    auto schema = ontology::OntologySchema::standard();
    std::vector<FilterRule> pointwise = {
        make_ontology_filter(schema),
        make_discovered_in_date_filter(),
        make_numeric_subject_filter(),
        make_non_named_filter(),
    };
    for (size_t a = 0; a < pointwise.size(); ++a) {
        for (size_t b = 0; b < pointwise.size(); ++b) {
            auto ab = apply(pointwise[b], apply(pointwise[a], in));
            auto ba = apply(pointwise[a], apply(pointwise[b], in));
            REQUIRE(ab.size() == ba.size());
            for (size_t i = 0; i < ab.size(); ++i) CHECK(ab[i] == ba[i]);
        }
    }
}

TEST_CASE("report serializations render") {
    Triples in = {t3("124", "indicates", "Android")};
    auto [out, report] = run_pipeline(in, {make_numeric_subject_filter()});
    CHECK(out.empty());
    CHECK(report.to_json().find("numeric_subjects") != std::string::npos);
    CHECK(report.to_table().find("numeric_subjects") != std::string::npos);
}
