#include "ctikg/triple_parser.hpp"

#include "ctikg/ontology.hpp"
#include "ctikg/util.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ctikg;
using namespace ctikg::parser;
using ontology::EntityType;

TEST_CASE("bracketed run on one line") {
    auto report = parse_triples(
        "['Adwind', 'targets', 'petroleum industry'], ['Adwind', 'targets', 'US']");
    REQUIRE(report.parsed.size() == 2);
    CHECK(report.parsed[0].triple.head == "Adwind");
    CHECK(report.parsed[0].triple.relation == "targets");
    CHECK(report.parsed[0].triple.tail == "petroleum industry");
    CHECK_FALSE(report.parsed[0].triple.typed());
    CHECK(report.parsed[1].triple.tail == "US");
    CHECK(report.shape_stats.at("quoted") == 2);
    CHECK(report.rejected_lines.empty());
}

TEST_CASE("numbered-list lines need exactly two top-level commas") {
    auto report = parse_triples(
        "1. Adwind RAT, isA, malware\n"
        "2. Adwind RAT, targets, petroleum industry in the US");
    REQUIRE(report.parsed.size() == 2);
    CHECK(report.parsed[0].triple.head == "Adwind RAT");
    CHECK(report.parsed[1].triple.tail == "petroleum industry in the US");
    CHECK(report.shape_stats.at("numbered") == 2);

    auto rejected = parse_triples("4. Adwind RAT, is hosted on a serving domain");
    CHECK(rejected.parsed.empty());
    REQUIRE(rejected.rejected_lines.size() == 1);
    CHECK(rejected.rejected_lines[0].line_no == 1);
}

TEST_CASE("typed bracketed tuple") {
    auto report = parse_triples("[Adwind[Malware], targets, US[Location]]");
    REQUIRE(report.parsed.size() == 1);
    const auto& t = report.parsed[0].triple;
    CHECK(t.head == "Adwind");
    CHECK(t.head_type == EntityType::Malware);
    CHECK(t.tail == "US");
    CHECK(t.tail_type == EntityType::Location);
    CHECK(t.typed());
    CHECK(report.shape_stats.at("typed") == 1);
}

TEST_CASE("typed tuple whose tail contains commas (dates) still parses") {
    auto report = parse_triples(
        "[Operation Emmental[ThreatActor], discoveredIn, July 22, 2014[Time]]");
    REQUIRE(report.parsed.size() == 1);
    const auto& t = report.parsed[0].triple;
    CHECK(t.head == "Operation Emmental");
    CHECK(t.head_type == EntityType::ThreatActor);
    CHECK(t.relation == "discoveredIn");
    CHECK(t.tail == "July 22, 2014");
    CHECK(t.tail_type == EntityType::Time);
}

TEST_CASE("unknown type label downgrades to untyped with a note") {
    auto report = parse_triples("[Pegasus[Malware], targets, iPhone 12[Hardware]]");
    REQUIRE(report.parsed.size() == 1);
    const auto& t = report.parsed[0].triple;
    CHECK(t.head_type == EntityType::Malware);
    CHECK(t.tail == "iPhone 12");
    CHECK_FALSE(t.tail_type.has_value());
    REQUIRE(report.type_notes.size() == 1);
    CHECK(report.type_notes[0].label == "Hardware");
}

TEST_CASE("empty input and free prose") {
    CHECK(parse_triples("").parsed.empty());
    CHECK(parse_triples("").rejected_lines.empty());

    auto nobody = parse_triples("nobody");
    CHECK(nobody.parsed.empty());
    REQUIRE(nobody.rejected_lines.size() == 1);
    CHECK(nobody.rejected_lines[0].line == "nobody");
}

TEST_CASE("parenthesized free text keeps its commas") {
    auto report =
        parse_triples("[Adwind RAT, terminates, security services (e.g., firewall, AV)]");
    REQUIRE(report.parsed.size() == 1);
    CHECK(report.parsed[0].triple.tail == "security services (e.g., firewall, AV)");
    CHECK(report.parsed[0].triple.relation == "terminates");  // raw, judged later
}

TEST_CASE("wrong field counts are rejected with a reason") {
    auto report = parse_triples("[only, two]\n[a, b, c, d]");
    CHECK(report.parsed.empty());
    REQUIRE(report.rejected_lines.size() == 2);
    CHECK(report.rejected_lines[0].reason.find("2") != std::string::npos);
    CHECK(report.rejected_lines[1].reason.find("4") != std::string::npos);
}

TEST_CASE("duplicates within one output keep the first occurrence") {
    auto report = parse_triples("[a, isA, b], [a, isA, b]\n[a, isA, b]");
    CHECK(report.parsed.size() == 1);
    CHECK(report.parsed[0].line_no == 1);
}

TEST_CASE("unknown relations are preserved raw at parse time") {
    auto report = parse_triples("[A, hostedOn, B]");
    REQUIRE(report.parsed.size() == 1);
    CHECK(report.parsed[0].triple.relation == "hostedOn");
    CHECK_FALSE(report.parsed[0].triple.relation_type().has_value());
}

TEST_CASE("line accounting on line-shaped inputs") {
    util::Rng rng(17);
    for (int round = 0; round < 50; ++round) {
        std::string input;
        size_t expect_lines = 0;
        for (int l = 0; l < 8; ++l) {
            switch (rng.next_below(4)) {
                case 0: input += "[h" + std::to_string(l) + ", isA, t" + std::to_string(l) + "]"; break;
                case 1: input += std::to_string(l + 1) + ". a" + std::to_string(l) + ", uses, b"; break;
                case 2: input += "free prose line " + std::to_string(l); break;
                case 3: input += "[broken, tuple]"; break;
            }
            input += "\n";
            ++expect_lines;
        }
        auto report = parse_triples(input);
        std::set<int> contributing;
        for (const auto& p : report.parsed) contributing.insert(p.line_no);
        CHECK(contributing.size() + report.rejected_lines.size() == expect_lines);
    }
}

TEST_CASE("serialize -> parse -> serialize is identity on clean triples") {
    util::Rng rng(23);
    auto rand_word = [&](int len) {
        std::string s;
        for (int i = 0; i < len; ++i) s += static_cast<char>('a' + rng.next_below(26));
        return s;
    };
    for (int i = 0; i < 1000; ++i) {
        ontology::TypedTriple t;
        t.head = rand_word(static_cast<int>(1 + rng.next_below(8)));
        t.relation = rand_word(static_cast<int>(1 + rng.next_below(6)));
        t.tail = rand_word(static_cast<int>(1 + rng.next_below(8))) + " " +
                 rand_word(static_cast<int>(1 + rng.next_below(5)));
        if (rng.next_below(2)) {
            t.head_type = static_cast<EntityType>(rng.next_below(11));
            t.tail_type = static_cast<EntityType>(rng.next_below(11));
        }
        std::string text = ontology::format_triple(t);
        auto report = parse_triples(text);
        REQUIRE(report.parsed.size() == 1);
        CHECK(report.parsed[0].triple == t);
        CHECK(ontology::format_triple(report.parsed[0].triple) == text);
    }
}

TEST_CASE("canonicalize sorts case-insensitively and dedups") {
    std::vector<ontology::TypedTriple> triples;
    auto add = [&](const std::string& h, const std::string& r, const std::string& t) {
        ontology::TypedTriple x;
        x.head = h;
        x.relation = r;
        x.tail = t;
        triples.push_back(x);
    };
    add("b", "isA", "c");
    add("a", "isA", "c");
    add("a", "isA", "c");
    add("  a ", "isA", "c");  // whitespace collapse makes this a duplicate too
    auto out = canonicalize(triples);
    REQUIRE(out.size() == 2);
    CHECK(out[0].head == "a");
    CHECK(out[1].head == "b");
}

TEST_CASE("canonicalize matches a reference sort oracle on random triples") {
    util::Rng rng(31);
    std::vector<ontology::TypedTriple> triples;
    for (int i = 0; i < 50; ++i) {
        ontology::TypedTriple t;
        t.head = std::string(1, static_cast<char>('A' + rng.next_below(26)));
        t.relation = std::string(1, static_cast<char>('a' + rng.next_below(4)));
        t.tail = std::string(1, static_cast<char>('a' + rng.next_below(26)));
        triples.push_back(t);
    }
    auto out = canonicalize(triples);

    // Naive oracle: unique key set, sorted.
    std::set<std::string> keys;
    for (const auto& t : triples)
        keys.insert(util::to_lower(t.head) + "\x1f" + util::to_lower(t.relation) + "\x1f" +
                    util::to_lower(t.tail));
    REQUIRE(out.size() == keys.size());
    auto it = keys.begin();
    for (const auto& t : out) {
        CHECK(util::to_lower(t.head) + "\x1f" + util::to_lower(t.relation) + "\x1f" +
                  util::to_lower(t.tail) ==
              *it);
        ++it;
    }
}

TEST_CASE("canonicalize is idempotent") {
    util::Rng rng(37);
    std::vector<ontology::TypedTriple> triples;
    for (int i = 0; i < 30; ++i) {
        ontology::TypedTriple t;
        t.head = "  h" + std::to_string(rng.next_below(10)) + "  x ";
        t.relation = "isA";
        t.tail = "t" + std::to_string(rng.next_below(10));
        triples.push_back(t);
    }
    auto once = canonicalize(triples);
    auto twice = canonicalize(once);
    CHECK(once.size() == twice.size());
    for (size_t i = 0; i < once.size(); ++i) CHECK(once[i] == twice[i]);
}

TEST_CASE("quotes are stripped only as outermost matching pairs") {
    auto report = parse_triples("['it''s quoted', 'isA', 'val\"ue']");
    REQUIRE(report.parsed.size() == 1);
    CHECK(report.parsed[0].triple.head == "it''s quoted");  // inner quotes survive
    CHECK(report.parsed[0].triple.tail == "val\"ue");
}
