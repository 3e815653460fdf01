#include "ctikg/corpus.hpp"

#include "ctikg/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ctikg::corpus {

int HeuristicTokenizer::count(std::string_view text) const {
    long words = 0;
    bool in_word = false;
    for (char c : text) {
        bool ws = std::isspace(static_cast<unsigned char>(c));
        if (!ws && !in_word) ++words;
        in_word = !ws;
    }
    return static_cast<int>((words * 4 + 2) / 3);  // ceil(words * 4/3)
}

const Tokenizer& default_tokenizer() {
    static HeuristicTokenizer tok;
    return tok;
}

int count_tokens(std::string_view text, const Tokenizer& tok) { return tok.count(text); }

namespace {

// Natural paragraphs are separated by one or more blank lines.
std::vector<std::string> split_natural_paragraphs(const std::string& text) {
    std::vector<std::string> paras;
    std::string current;
    for (const std::string& line : util::split_lines(text)) {
        if (util::trim(line).empty()) {
            if (!util::trim(current).empty()) paras.push_back(util::trim(current));
            current.clear();
        } else {
            if (!current.empty()) current += "\n";
            current += line;
        }
    }
    if (!util::trim(current).empty()) paras.push_back(util::trim(current));
    return paras;
}

// Sentence boundaries: ". ", "! ", "? " (terminator stays with the left part).
std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i + 1 < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && text[i + 1] == ' ') {
            out.push_back(util::trim(text.substr(start, i - start + 1)));
            start = i + 2;
        }
    }
    if (start < text.size()) {
        std::string last = util::trim(text.substr(start));
        if (!last.empty()) out.push_back(last);
    }
    return out;
}

// Greedily packs consecutive pieces into chunks whose joined text stays
// within the budget.
std::vector<std::string> pack_greedy(const std::vector<std::string>& pieces,
                                     const std::string& joiner, int max_tokens,
                                     const Tokenizer& tok) {
    std::vector<std::string> chunks;
    std::string current;
    for (const std::string& piece : pieces) {
        std::string candidate = current.empty() ? piece : current + joiner + piece;
        if (!current.empty() && tok.count(candidate) > max_tokens) {
            chunks.push_back(current);
            current = piece;
        } else {
            current = std::move(candidate);
        }
    }
    if (!current.empty()) chunks.push_back(current);
    return chunks;
}

}  // namespace

std::vector<Paragraph> chunk_document(const Document& doc, int max_tokens, const Tokenizer& tok) {
    if (max_tokens < 1) throw InvalidBudget();

    std::vector<Paragraph> out;
    auto emit = [&](std::string text, bool oversized) {
        Paragraph p;
        p.doc_id = doc.id;
        p.index = static_cast<int>(out.size());
        p.token_count = tok.count(text);
        p.text = std::move(text);
        p.oversized = oversized;
        out.push_back(std::move(p));
    };

    std::vector<std::string> pending;  // natural paragraphs that fit the budget
    auto flush_pending = [&] {
        for (std::string& chunk : pack_greedy(pending, "\n\n", max_tokens, tok))
            emit(std::move(chunk), false);
        pending.clear();
    };

    for (std::string& para : split_natural_paragraphs(doc.text)) {
        if (tok.count(para) <= max_tokens) {
            pending.push_back(std::move(para));
            continue;
        }
        // Over-budget natural paragraph: close the current run, then split
        // it on sentence boundaries and pack those.
        flush_pending();
        for (std::string& chunk : pack_greedy(split_sentences(para), " ", max_tokens, tok))
            emit(std::move(chunk), tok.count(chunk) > max_tokens);
    }
    flush_pending();
    return out;
}

std::vector<AnnotatedExample> match_annotations(
    const std::vector<Paragraph>& paragraphs, const std::vector<ontology::TypedTriple>& triples) {
    std::vector<AnnotatedExample> out;
    for (const Paragraph& para : paragraphs) {
        const std::string haystack = util::to_lower(para.text);
        AnnotatedExample ex;
        ex.paragraph = para;
        for (const ontology::TypedTriple& t : triples) {
            if (t.provenance && t.provenance->doc_id != para.doc_id) continue;
            if (t.head.empty() || t.tail.empty()) continue;
            if (haystack.find(util::to_lower(t.head)) == std::string::npos) continue;
            if (haystack.find(util::to_lower(t.tail)) == std::string::npos) continue;
            ex.reference_triples.push_back(t);
        }
        if (!ex.reference_triples.empty()) out.push_back(std::move(ex));
    }
    return out;
}

std::array<size_t, 3> split_counts(size_t n, std::array<int, 3> ratio) {
    int ratio_sum = ratio[0] + ratio[1] + ratio[2];
    if (ratio[0] <= 0 || ratio[1] <= 0 || ratio[2] <= 0 || ratio_sum != 100)
        throw std::runtime_error("split ratio components must be positive and sum to 100");

    std::array<size_t, 3> counts{};
    std::array<double, 3> frac{};
    size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double exact = static_cast<double>(n) * ratio[i] / 100.0;
        counts[i] = static_cast<size_t>(std::floor(exact + 1e-9));
        frac[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    // Hand out the remainder by largest fractional part; ties fall to the
    // earlier split (train first).
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (size_t r = 0; r < n - assigned; ++r) counts[order[r % 3]] += 1;
    return counts;
}

DatasetSplit split_dataset(const std::vector<AnnotatedExample>& examples,
                           std::array<int, 3> ratio, uint64_t seed) {
    std::vector<size_t> idx(examples.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    util::Rng rng(seed);
    rng.shuffle(idx);

    auto counts = split_counts(examples.size(), ratio);
    DatasetSplit split;
    split.seed = seed;
    size_t pos = 0;
    for (size_t i = 0; i < counts[0]; ++i) split.train.push_back(examples[idx[pos++]]);
    for (size_t i = 0; i < counts[1]; ++i) split.validation.push_back(examples[idx[pos++]]);
    for (size_t i = 0; i < counts[2]; ++i) split.test.push_back(examples[idx[pos++]]);
    return split;
}

namespace {

json triple_to_json(const ontology::TypedTriple& t) {
    json j;
    j["head"] = t.head;
    if (t.head_type) j["head_type"] = std::string(ontology::entity_type_name(*t.head_type));
    j["relation"] = t.relation;
    j["tail"] = t.tail;
    if (t.tail_type) j["tail_type"] = std::string(ontology::entity_type_name(*t.tail_type));
    if (t.provenance) {
        j["doc_id"] = t.provenance->doc_id;
        j["paragraph_index"] = t.provenance->paragraph_index;
    }
    return j;
}

ontology::TypedTriple triple_from_json(const json& j) {
    ontology::TypedTriple t;
    t.head = j.at("head").get<std::string>();
    t.relation = j.at("relation").get<std::string>();
    t.tail = j.at("tail").get<std::string>();
    if (j.contains("head_type"))
        t.head_type = ontology::parse_entity_type(j["head_type"].get<std::string>());
    if (j.contains("tail_type"))
        t.tail_type = ontology::parse_entity_type(j["tail_type"].get<std::string>());
    if (j.contains("doc_id")) {
        ontology::Provenance p;
        p.doc_id = j["doc_id"].get<std::string>();
        p.paragraph_index = j.value("paragraph_index", 0);
        t.provenance = p;
    }
    return t;
}

}  // namespace

std::vector<Document> load_documents(const std::string& path) {
    std::vector<Document> docs;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".txt")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files)
            docs.push_back({f.stem().string(), util::read_file(f.string()), f.string()});
    } else {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open corpus: " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (util::trim(line).empty()) continue;
            json j = json::parse(line);
            Document d;
            d.id = j.at("id").get<std::string>();
            d.text = j.at("text").get<std::string>();
            if (j.contains("source_uri")) d.source_uri = j["source_uri"].get<std::string>();
            docs.push_back(std::move(d));
        }
    }
    for (const Document& d : docs)
        if (d.text.empty()) throw std::runtime_error("empty document: " + d.id);
    return docs;
}

std::vector<ontology::TypedTriple> load_triples_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open triples: " + path);
    std::vector<ontology::TypedTriple> out;
    std::string line;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        out.push_back(triple_from_json(json::parse(line)));
    }
    return out;
}

void save_triples_jsonl(const std::string& path,
                        const std::vector<ontology::TypedTriple>& triples) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write triples: " + path);
    for (const auto& t : triples) out << triple_to_json(t).dump() << "\n";
}

std::vector<Paragraph> load_paragraphs_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open paragraphs: " + path);
    std::vector<Paragraph> out;
    std::string line;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        json j = json::parse(line);
        Paragraph p;
        p.doc_id = j.at("doc_id").get<std::string>();
        p.index = j.at("index").get<int>();
        p.text = j.at("text").get<std::string>();
        p.token_count = j.at("token_count").get<int>();
        p.oversized = j.value("oversized", false);
        out.push_back(std::move(p));
    }
    return out;
}

void save_paragraphs_jsonl(const std::string& path, const std::vector<Paragraph>& paragraphs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write paragraphs: " + path);
    for (const Paragraph& p : paragraphs) {
        json j;
        j["doc_id"] = p.doc_id;
        j["index"] = p.index;
        j["text"] = p.text;
        j["token_count"] = p.token_count;
        j["oversized"] = p.oversized;
        out << j.dump() << "\n";
    }
}

}  // namespace ctikg::corpus
