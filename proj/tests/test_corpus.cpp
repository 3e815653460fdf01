#include "ctikg/corpus.hpp"

#include "ctikg/util.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>
#include <sstream>

using namespace ctikg;
using namespace ctikg::corpus;

namespace {

std::string words(int n, const std::string& stem = "w") {
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += " ";
        out += stem + std::to_string(i);
    }
    return out;
}

ontology::TypedTriple triple(const std::string& h, const std::string& r, const std::string& t) {
    ontology::TypedTriple out;
    out.head = h;
    out.relation = r;
    out.tail = t;
    return out;
}

}  // namespace

TEST_CASE("count_tokens heuristic: ceil(words * 4/3)") {
    CHECK(count_tokens("") == 0);
    CHECK(count_tokens("one two three") == 4);
    CHECK(count_tokens(words(600)) == 800);
    CHECK(count_tokens("  padded   with\t whitespace \n") == 4);  // 3 words
}

TEST_CASE("chunk_document basics") {
    SUBCASE("empty text yields no chunks") {
        // loaders reject empty docs, but chunking itself must cope
        Document d{"d", " ", std::nullopt};
        CHECK(chunk_document(d, 100).empty());
    }
    SUBCASE("invalid budget") {
        Document d{"d", "text", std::nullopt};
        CHECK_THROWS_AS(chunk_document(d, 0), InvalidBudget);
    }
    SUBCASE("greedy packing: 10 paragraphs of 100 tokens, budget 400 -> 4+4+2") {
        // 75 words => ceil(75*4/3) = 100 tokens per natural paragraph
        std::string text;
        for (int p = 0; p < 10; ++p) text += words(75, "p" + std::to_string(p) + "_") + "\n\n";
        Document d{"d", text, std::nullopt};
        auto chunks = chunk_document(d, 400);
        REQUIRE(chunks.size() == 3);
        CHECK(chunks[0].token_count == 400);
        CHECK(chunks[1].token_count == 400);
        CHECK(chunks[2].token_count == 200);
        for (const auto& c : chunks) CHECK_FALSE(c.oversized);
        CHECK(chunks[0].index == 0);
        CHECK(chunks[2].index == 2);
    }
}

TEST_CASE("over-budget natural paragraph splits on sentence boundaries") {
    // One natural paragraph of 9 sentences x 100 words = 900 words = 1200 tokens.
    std::string para;
    for (int s = 0; s < 9; ++s) para += words(100, "s" + std::to_string(s) + "_") + ". ";
    Document d{"d", para, std::nullopt};
    auto chunks = chunk_document(d, 1000);
    CHECK(chunks.size() >= 2);
    for (const auto& c : chunks) {
        CHECK(c.token_count <= 1000);
        CHECK_FALSE(c.oversized);
        CHECK(c.token_count == count_tokens(c.text));
    }
}

TEST_CASE("a single over-budget sentence becomes one oversized chunk") {
    Document d{"d", words(90), std::nullopt};  // 120 tokens, no sentence breaks
    auto chunks = chunk_document(d, 50);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].oversized);
    CHECK(chunks[0].token_count > 50);
}

TEST_CASE("chunking preserves order and loses no content") {
    std::string text = "Alpha beta gamma.\n\nDelta epsilon.\n\nZeta eta theta iota.";
    Document d{"d", text, std::nullopt};
    auto chunks = chunk_document(d, 4);  // small budget: one natural paragraph per chunk
    std::string joined;
    for (const auto& c : chunks) {
        if (!joined.empty()) joined += "\n\n";
        joined += c.text;
    }
    CHECK(joined == text);
}

TEST_CASE("chunk count is monotone in the budget") {
    std::string text;
    util::Rng rng(11);
    for (int p = 0; p < 12; ++p) text += words(static_cast<int>(5 + rng.next_below(40))) + "\n\n";
    Document d{"d", text, std::nullopt};
    size_t prev = chunk_document(d, 10).size();
    for (int budget : {20, 40, 80, 160, 320}) {
        size_t now = chunk_document(d, budget).size();
        CHECK(now <= prev);
        prev = now;
    }
}

TEST_CASE("match_annotations requires both endpoints in the paragraph") {
    Paragraph p;
    p.doc_id = "d";
    p.index = 0;
    p.text = "SpyNote is a Trojan targeting Android";
    p.token_count = count_tokens(p.text);

    SUBCASE("both present attaches the triple") {
        auto out = match_annotations({p}, {triple("SpyNote", "isA", "Trojan")});
        REQUIRE(out.size() == 1);
        REQUIRE(out[0].reference_triples.size() == 1);
        CHECK(out[0].reference_triples[0].head == "SpyNote");
    }
    SUBCASE("absent head drops the paragraph") {
        auto out = match_annotations({p}, {triple("Pegasus", "targets", "iOS")});
        CHECK(out.empty());
    }
    SUBCASE("matching is case-insensitive") {
        auto out = match_annotations({p}, {triple("spynote", "targets", "ANDROID")});
        REQUIRE(out.size() == 1);
    }
}

TEST_CASE("match_annotations: hand-placed assignment over 3 paragraphs x 5 triples") {
    std::vector<Paragraph> paras(3);
    paras[0] = {"d", 0, "FakeSpy infects Android phones in Japan", 0, false};
    paras[1] = {"d", 1, "Adwind targets the petroleum industry", 0, false};
    paras[2] = {"d", 2, "Pegasus was built by NSO Group", 0, false};
    std::vector<ontology::TypedTriple> triples = {
        triple("FakeSpy", "targets", "Android"),     // para 0
        triple("FakeSpy", "targets", "Japan"),       // para 0
        triple("Adwind", "targets", "petroleum"),    // para 1
        triple("Pegasus", "hasAuthor", "NSO Group"), // para 2
        triple("Emotet", "targets", "Windows"),      // nowhere
    };
    auto out = match_annotations(paras, triples);

    // Exhaustive containment oracle.
    auto contains = [](const std::string& hay, const std::string& needle) {
        return util::to_lower(hay).find(util::to_lower(needle)) != std::string::npos;
    };
    size_t oracle_paragraphs = 0;
    std::vector<size_t> oracle_counts;
    for (const auto& p : paras) {
        size_t count = 0;
        for (const auto& t : triples)
            if (contains(p.text, t.head) && contains(p.text, t.tail)) ++count;
        if (count) {
            ++oracle_paragraphs;
            oracle_counts.push_back(count);
        }
    }
    REQUIRE(out.size() == oracle_paragraphs);
    for (size_t i = 0; i < out.size(); ++i)
        CHECK(out[i].reference_triples.size() == oracle_counts[i]);
    CHECK(out[0].reference_triples.size() == 2);
    CHECK(out[1].reference_triples.size() == 1);
    CHECK(out[2].reference_triples.size() == 1);
}

TEST_CASE("match_annotations never attaches an absent endpoint (randomized)") {
    util::Rng rng(99);
    for (int round = 0; round < 25; ++round) {
        std::vector<Paragraph> paras;
        for (int p = 0; p < 4; ++p) {
            Paragraph para;
            para.doc_id = "d";
            para.index = p;
            para.text = words(static_cast<int>(3 + rng.next_below(8)),
                              "tok" + std::to_string(rng.next_below(5)) + "_");
            paras.push_back(para);
        }
        std::vector<ontology::TypedTriple> triples;
        for (int t = 0; t < 6; ++t) {
            std::string stem = "tok" + std::to_string(rng.next_below(6)) + "_";
            triples.push_back(triple(stem + std::to_string(rng.next_below(10)), "isA",
                                     stem + std::to_string(rng.next_below(10))));
        }
        for (const auto& ex : match_annotations(paras, triples)) {
            std::string hay = util::to_lower(ex.paragraph.text);
            for (const auto& t : ex.reference_triples) {
                CHECK(hay.find(util::to_lower(t.head)) != std::string::npos);
                CHECK(hay.find(util::to_lower(t.tail)) != std::string::npos);
            }
        }
    }
}

namespace {

std::vector<AnnotatedExample> synthetic_examples(size_t n) {
    std::vector<AnnotatedExample> out(n);
    for (size_t i = 0; i < n; ++i) {
        out[i].paragraph.doc_id = "doc" + std::to_string(i);
        out[i].paragraph.index = static_cast<int>(i);
    }
    return out;
}

}  // namespace

TEST_CASE("split_dataset reproduces the 574/115/29 counts at N=718") {
    auto split = split_dataset(synthetic_examples(718), {80, 16, 4}, 1);
    CHECK(split.train.size() == 574);
    CHECK(split.validation.size() == 115);
    CHECK(split.test.size() == 29);
}

TEST_CASE("split_dataset edge cases") {
    auto empty = split_dataset({}, {80, 16, 4}, 1);
    CHECK(empty.train.empty());
    CHECK(empty.validation.empty());
    CHECK(empty.test.empty());

    auto exact = split_dataset(synthetic_examples(100), {80, 16, 4}, 1);
    CHECK(exact.train.size() == 80);
    CHECK(exact.validation.size() == 16);
    CHECK(exact.test.size() == 4);
}

TEST_CASE("split_dataset is a deterministic partition for any N and seed") {
    util::Rng rng(7);
    for (int round = 0; round < 30; ++round) {
        size_t n = rng.next_below(500);
        uint64_t seed = rng.next_u64();
        auto ex = synthetic_examples(n);
        auto a = split_dataset(ex, {80, 16, 4}, seed);
        auto b = split_dataset(ex, {80, 16, 4}, seed);

        CHECK(a.train.size() + a.validation.size() + a.test.size() == n);
        // Disjointness + coverage via doc-id sets.
        std::set<std::string> seen;
        auto absorb = [&](const std::vector<AnnotatedExample>& part) {
            for (const auto& e : part) CHECK(seen.insert(e.paragraph.doc_id).second);
        };
        absorb(a.train);
        absorb(a.validation);
        absorb(a.test);
        CHECK(seen.size() == n);
        // Same seed, same assignment.
        CHECK(a.train.size() == b.train.size());
        for (size_t i = 0; i < a.train.size(); ++i)
            CHECK(a.train[i].paragraph.doc_id == b.train[i].paragraph.doc_id);
    }
}

TEST_CASE("split ratio validation") {
    CHECK_THROWS(split_dataset(synthetic_examples(10), {80, 16, 5}, 1));
    CHECK_THROWS(split_dataset(synthetic_examples(10), {100, 0, 0}, 1));
}

TEST_CASE("document loaders") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "ctikg_corpus_test";
    fs::create_directories(dir);
    util::write_file((dir / "b_doc.txt").string(), "beta text");
    util::write_file((dir / "a_doc.txt").string(), "alpha text");
    auto docs = load_documents(dir.string());
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].id == "a_doc");  // sorted by filename
    CHECK(docs[1].id == "b_doc");

    auto jsonl = dir / "corpus.jsonl";
    util::write_file(jsonl.string(),
                     "{\"id\":\"x\",\"text\":\"hello world\"}\n"
                     "{\"id\":\"y\",\"text\":\"more text\",\"source_uri\":\"http://e\"}\n");
    auto docs2 = load_documents(jsonl.string());
    REQUIRE(docs2.size() == 2);
    CHECK(docs2[1].source_uri.value() == "http://e");
    fs::remove_all(dir);
}

TEST_CASE("triple jsonl round-trip") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "ctikg_triples_test.jsonl").string();
    std::vector<ontology::TypedTriple> triples;
    auto t = triple("Adwind", "targets", "US");
    t.head_type = ontology::EntityType::Malware;
    t.tail_type = ontology::EntityType::Location;
    t.provenance = ontology::Provenance{"doc1", 3};
    triples.push_back(t);
    triples.push_back(triple("SpyNote", "isA", "Trojan"));
    save_triples_jsonl(path, triples);
    auto loaded = load_triples_jsonl(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0] == triples[0]);
    CHECK(loaded[0].provenance->doc_id == "doc1");
    CHECK(loaded[1] == triples[1]);
    fs::remove(path);
}
