#include "ctikg/rouge.hpp"

#include "ctikg/util.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace ctikg;
using namespace ctikg::rouge;

namespace {

std::vector<std::string> toks(const std::string& s) { return tokenize(s); }

ontology::TypedTriple t3(const std::string& h, const std::string& r, const std::string& t) {
    ontology::TypedTriple out;
    out.head = h;
    out.relation = r;
    out.tail = t;
    return out;
}

// Exponential brute force: longest common subsequence by enumerating all
// subsequences of the shorter side. Only for tiny inputs.
size_t lcs_brute(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    size_t best = 0;
    for (size_t mask = 0; mask < (size_t{1} << small.size()); ++mask) {
        std::vector<std::string> sub;
        for (size_t i = 0; i < small.size(); ++i)
            if (mask & (size_t{1} << i)) sub.push_back(small[i]);
        // Check subsequence containment in `large`.
        size_t j = 0;
        for (const auto& tok : large) {
            if (j < sub.size() && tok == sub[j]) ++j;
        }
        if (j == sub.size()) best = std::max(best, sub.size());
    }
    return best;
}

}  // namespace

TEST_CASE("tokenization is lowercase and alphanumeric-run based") {
    auto t = toks("[Adwind, targets, retail and petroleum industry]");
    REQUIRE(t.size() == 6);
    CHECK(t[0] == "adwind");
    CHECK(t[2] == "retail");
    CHECK(toks("").empty());
    CHECK(toks("...?!").empty());
    CHECK(toks("CVE-2021-44228") == std::vector<std::string>{"cve", "2021", "44228"});
}

TEST_CASE("worked example: ROUGE-1 on the Adwind pair") {
    auto ref = toks("[Adwind, targets, retail and petroleum industry]");
    auto cand = toks("[Adwind, targets, petroleum production industry]");
    auto s = rouge_n(cand, ref, 1);
    CHECK(s.recall == doctest::Approx(4.0 / 6.0).epsilon(1e-9));
    CHECK(s.precision == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(s.f1 == doctest::Approx(0.7273).epsilon(2e-4));
}

TEST_CASE("worked example: ROUGE-2 bigram counts from exhaustive enumeration") {
    auto ref = toks("[Adwind, targets, retail and petroleum industry]");
    auto cand = toks("[Adwind, targets, petroleum production industry]");
    // Bigram sets share only (adwind, targets): recall 1/5, precision 1/4.
    auto s = rouge_n(cand, ref, 2);
    CHECK(s.recall == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(s.precision == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(s.f1 == doctest::Approx(2 * 0.2 * 0.25 / 0.45).epsilon(1e-9));
}

TEST_CASE("identical sequences score 1 for every n up to the length") {
    auto a = toks("alpha beta gamma delta");
    for (int n = 1; n <= 4; ++n) {
        auto s = rouge_n(a, a, n);
        CHECK(s.precision == doctest::Approx(1.0));
        CHECK(s.recall == doctest::Approx(1.0));
        CHECK(s.f1 == doctest::Approx(1.0));
    }
}

TEST_CASE("rouge_n edge cases") {
    CHECK_THROWS_AS(rouge_n({}, {}, 0), InvalidN);
    auto s = rouge_n({}, toks("a b c"), 1);
    CHECK(s.recall == 0.0);
    CHECK(s.precision == 0.0);
    CHECK(s.f1 == 0.0);
    // n longer than both sides: no n-grams at all.
    auto s6 = rouge_n(toks("a b"), toks("c d"), 6);
    CHECK(s6.f1 == 0.0);
}

TEST_CASE("multiset clipping caps repeated candidate n-grams") {
    auto ref = toks("a b a");   // 'a' appears twice
    auto cand = toks("a a a a");
    auto s = rouge_n(cand, ref, 1);
    CHECK(s.recall == doctest::Approx(2.0 / 3.0));   // clipped matches = 2
    CHECK(s.precision == doctest::Approx(2.0 / 4.0));
}

TEST_CASE("rouge_l on the Adwind pair via LCS") {
    auto ref = toks("[Adwind, targets, retail and petroleum industry]");
    auto cand = toks("[Adwind, targets, petroleum production industry]");
    auto s = rouge_l(cand, ref);
    // LCS = (adwind, targets, petroleum, industry), length 4.
    CHECK(s.recall == doctest::Approx(4.0 / 6.0));
    CHECK(s.precision == doctest::Approx(4.0 / 5.0));
    CHECK(s.f1 == doctest::Approx(0.7273).epsilon(2e-4));
}

TEST_CASE("rouge_l edge cases") {
    CHECK(rouge_l(toks("x y z"), toks("p q r")).f1 == 0.0);
    auto rev = rouge_l(toks("a b c d"), toks("d c b a"));
    CHECK(rev.recall == doctest::Approx(0.25));  // reversed distinct tokens: LCS = 1
    CHECK(rouge_l({}, {}).f1 == 0.0);
}

TEST_CASE("rouge_l agrees with a brute-force subsequence oracle on short inputs") {
    util::Rng rng(53);
    const char* vocab[] = {"a", "b", "c", "d"};
    for (int round = 0; round < 200; ++round) {
        std::vector<std::string> a, b;
        for (size_t i = 0, n = 1 + rng.next_below(8); i < n; ++i)
            a.push_back(vocab[rng.next_below(4)]);
        for (size_t i = 0, n = 1 + rng.next_below(8); i < n; ++i)
            b.push_back(vocab[rng.next_below(4)]);
        auto s = rouge_l(a, b);
        size_t expected = lcs_brute(a, b);
        CHECK(s.recall == doctest::Approx(static_cast<double>(expected) / b.size()));
        CHECK(s.precision == doctest::Approx(static_cast<double>(expected) / a.size()));
    }
}

TEST_CASE("LCS symmetry: recall*|b| == swapped recall*|a|") {
    util::Rng rng(59);
    const char* vocab[] = {"x", "y", "z", "w", "v"};
    for (int round = 0; round < 100; ++round) {
        std::vector<std::string> a, b;
        for (size_t i = 0, n = 1 + rng.next_below(12); i < n; ++i)
            a.push_back(vocab[rng.next_below(5)]);
        for (size_t i = 0, n = 1 + rng.next_below(12); i < n; ++i)
            b.push_back(vocab[rng.next_below(5)]);
        auto ab = rouge_l(a, b);
        auto ba = rouge_l(b, a);
        CHECK(ab.recall * b.size() == doctest::Approx(ba.recall * a.size()));
    }
}

TEST_CASE("scores stay in [0,1] and monotonicity of recall under matching append") {
    util::Rng rng(61);
    const char* vocab[] = {"a", "b", "c", "d", "e", "f"};
    for (int round = 0; round < 100; ++round) {
        std::vector<std::string> ref, cand;
        for (size_t i = 0, n = 2 + rng.next_below(10); i < n; ++i)
            ref.push_back(vocab[rng.next_below(6)]);
        for (size_t i = 0, n = 1 + rng.next_below(10); i < n; ++i)
            cand.push_back(vocab[rng.next_below(6)]);
        for (int n = 1; n <= 3; ++n) {
            auto s = rouge_n(cand, ref, n);
            CHECK(s.precision >= 0.0);
            CHECK(s.precision <= 1.0);
            CHECK(s.recall >= 0.0);
            CHECK(s.recall <= 1.0);
            CHECK(s.f1 >= 0.0);
            CHECK(s.f1 <= 1.0);
        }
        // Appending a reference token to the candidate never lowers recall.
        auto before = rouge_n(cand, ref, 1).recall;
        auto extended = cand;
        extended.push_back(ref[rng.next_below(ref.size())]);
        CHECK(rouge_n(extended, ref, 1).recall >= before - 1e-12);
    }
}

TEST_CASE("ROUGE-1 recall equals set intersection over reference for distinct tokens") {
    auto ref = toks("alpha beta gamma delta");
    auto cand = toks("gamma epsilon alpha");
    auto s = rouge_n(cand, ref, 1);
    std::set<std::string> rs(ref.begin(), ref.end()), cs(cand.begin(), cand.end());
    std::vector<std::string> inter;
    std::set_intersection(rs.begin(), rs.end(), cs.begin(), cs.end(), std::back_inserter(inter));
    CHECK(s.recall == doctest::Approx(static_cast<double>(inter.size()) / ref.size()));
}

TEST_CASE("evaluate_extraction sorts both sides before scoring") {
    std::vector<ontology::TypedTriple> ref = {t3("b", "isA", "c"), t3("a", "targets", "d")};
    std::vector<ontology::TypedTriple> cand = {t3("a", "targets", "d"), t3("b", "isA", "c")};
    auto scores = evaluate_extraction(cand, ref);
    for (const auto& [n, s] : scores.by_n) CHECK(s.f1 == doctest::Approx(1.0));
    CHECK(scores.lcs.f1 == doctest::Approx(1.0));
}

TEST_CASE("empty candidate scores zero across the board") {
    std::vector<ontology::TypedTriple> ref = {t3("a", "isA", "b")};
    auto scores = evaluate_extraction({}, ref);
    for (const auto& [n, s] : scores.by_n) {
        CHECK(s.precision == 0.0);
        CHECK(s.recall == 0.0);
        CHECK(s.f1 == 0.0);
    }
    CHECK(scores.lcs.f1 == 0.0);
}

TEST_CASE("evaluate_extraction against a hand-computed perturbed set") {
    // ref text after canonicalize/join: "[a, isA, b], [c, uses, d]"
    //   tokens: a isa b c uses d (6)
    // cand perturbs one field: "[a, isA, b], [c, uses, x]"
    std::vector<ontology::TypedTriple> ref = {t3("a", "isA", "b"), t3("c", "uses", "d")};
    std::vector<ontology::TypedTriple> cand = {t3("a", "isA", "b"), t3("c", "uses", "x")};
    auto scores = evaluate_extraction(cand, ref, {1, 2});
    CHECK(scores.by_n.at(1).recall == doctest::Approx(5.0 / 6.0));
    CHECK(scores.by_n.at(1).precision == doctest::Approx(5.0 / 6.0));
    // bigrams: ref {a-isa, isa-b, b-c, c-uses, uses-d}; cand {a-isa, isa-b, b-c, c-uses, uses-x}
    CHECK(scores.by_n.at(2).recall == doctest::Approx(4.0 / 5.0));
    CHECK(scores.lcs.recall == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("typed triples carry their types into the scored text") {
    std::vector<ontology::TypedTriple> a = {t3("x", "isA", "y")};
    auto typed = a;
    typed[0].head_type = ontology::EntityType::Malware;
    typed[0].tail_type = ontology::EntityType::MalwareType;
    auto same = evaluate_extraction(a, a);
    auto cross = evaluate_extraction(typed, a);
    CHECK(same.by_n.at(1).f1 == doctest::Approx(1.0));
    CHECK(cross.by_n.at(1).f1 < 1.0);  // type tokens diverge
}

TEST_CASE("aggregate is the arithmetic mean per metric") {
    ExtractionScores a, b;
    a.by_n[1] = {0.0, 0.0, 0.0};
    b.by_n[1] = {1.0, 1.0, 1.0};
    a.lcs = {0.0, 0.0, 0.0};
    b.lcs = {1.0, 1.0, 1.0};
    auto mean = aggregate({a, b});
    CHECK(mean.by_n.at(1).f1 == doctest::Approx(0.5));
    CHECK(mean.lcs.precision == doctest::Approx(0.5));

    auto solo = aggregate({b});
    CHECK(solo.by_n.at(1).f1 == doctest::Approx(1.0));

    CHECK_THROWS_AS(aggregate({}), EmptyInput);
}

TEST_CASE("aggregate matches a spreadsheet-style mean over 29 synthetic examples") {
    util::Rng rng(67);
    std::vector<ExtractionScores> scores;
    double sum_f1 = 0.0;
    for (int i = 0; i < 29; ++i) {
        ExtractionScores s;
        double f1 = rng.next_double();
        s.by_n[1] = {rng.next_double(), rng.next_double(), f1};
        s.lcs = {0.5, 0.5, 0.5};
        sum_f1 += f1;
        scores.push_back(s);
    }
    auto mean = aggregate(scores);
    CHECK(mean.by_n.at(1).f1 == doctest::Approx(sum_f1 / 29.0));
}
