#include "ctikg/kg.hpp"

#include "ctikg/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

using json = nlohmann::json;

namespace ctikg::kg {

int KnowledgeGraph::add_entity(const std::string& surface) {
    const std::string key = util::to_lower(util::trim(surface));
    auto it = entity_by_key_.find(key);
    if (it != entity_by_key_.end()) return it->second;
    int id = static_cast<int>(entity_display_.size());
    entity_display_.push_back(util::trim(surface));  // first-seen casing wins
    entity_types_.emplace_back();
    entity_by_key_.emplace(key, id);
    return id;
}

int KnowledgeGraph::add_relation(const std::string& name) {
    auto it = relation_by_name_.find(name);
    if (it != relation_by_name_.end()) return it->second;
    int id = static_cast<int>(relation_names_.size());
    relation_names_.push_back(name);
    relation_by_name_.emplace(name, id);
    return id;
}

void KnowledgeGraph::add_triple(int h, int r, int t,
                                const std::optional<ontology::Provenance>& prov) {
    IdTriple key{h, r, t};
    auto it = triple_index_.find(key);
    if (it == triple_index_.end()) {
        KgTriple triple;
        triple.head = h;
        triple.rel = r;
        triple.tail = t;
        if (prov) triple.provenance.push_back(*prov);
        triple_index_.emplace(key, triples_.size());
        triples_.push_back(std::move(triple));
    } else {
        KgTriple& existing = triples_[it->second];
        existing.count += 1;
        if (prov) existing.provenance.push_back(*prov);
    }
}

KnowledgeGraph KnowledgeGraph::build(const std::vector<ontology::TypedTriple>& triples) {
    KnowledgeGraph g;
    for (const ontology::TypedTriple& t : triples) {
        int h = g.add_entity(t.head);
        // Canonical spelling for known relations, raw surface otherwise.
        std::string rel = t.relation_type()
                              ? std::string(ontology::relation_name(*t.relation_type()))
                              : util::trim(t.relation);
        int r = g.add_relation(rel);
        int tl = g.add_entity(t.tail);
        g.add_triple(h, r, tl, t.provenance);
        if (t.head_type) g.entity_types_[h][*t.head_type] += 1;
        if (t.tail_type) g.entity_types_[tl][*t.tail_type] += 1;
    }
    return g;
}

std::optional<int> KnowledgeGraph::find_entity(const std::string& surface) const {
    auto it = entity_by_key_.find(util::to_lower(util::trim(surface)));
    if (it == entity_by_key_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> KnowledgeGraph::find_relation(const std::string& name) const {
    auto it = relation_by_name_.find(name);
    if (it == relation_by_name_.end()) return std::nullopt;
    return it->second;
}

const std::map<ontology::EntityType, int>& KnowledgeGraph::observed_types(int entity_id) const {
    return entity_types_.at(entity_id);
}

KgStats KnowledgeGraph::stats() const {
    KgStats s;
    s.entities = entity_display_.size();
    s.relations = relation_names_.size();
    s.triples = triples_.size();
    std::vector<size_t> degree(entity_display_.size(), 0);
    for (const KgTriple& t : triples_) {
        s.per_relation[relation_names_[t.rel]] += 1;
        degree[t.head] += 1;
        degree[t.tail] += 1;
    }
    for (size_t d : degree) s.degree_histogram[static_cast<int>(d)] += 1;
    return s;
}

std::string KgStats::to_json() const {
    json j;
    j["entities"] = entities;
    j["relations"] = relations;
    j["triples"] = triples;
    j["per_relation"] = per_relation;
    json hist = json::object();
    for (const auto& [deg, n] : degree_histogram) hist[std::to_string(deg)] = n;
    j["degree_histogram"] = hist;
    return j.dump(2);
}

std::vector<IdTriple> KnowledgeGraph::id_triples() const {
    std::vector<IdTriple> out;
    out.reserve(triples_.size());
    for (const KgTriple& t : triples_) out.push_back({t.head, t.rel, t.tail});
    return out;
}

LPSplit KnowledgeGraph::split_for_lp(std::array<int, 3> ratios, uint64_t seed) const {
    if (ratios[0] + ratios[1] + ratios[2] != 100 || ratios[0] <= 0 || ratios[1] <= 0 ||
        ratios[2] <= 0)
        throw std::runtime_error("lp split ratios must be positive and sum to 100");

    std::vector<IdTriple> all = id_triples();
    util::Rng rng(seed);
    rng.shuffle(all);

    size_t n = all.size();
    size_t n_valid = n * static_cast<size_t>(ratios[1]) / 100;
    size_t n_test = n * static_cast<size_t>(ratios[2]) / 100;
    size_t n_train = n - n_valid - n_test;

    LPSplit split;
    split.seed = seed;
    split.train.assign(all.begin(), all.begin() + n_train);
    split.valid.assign(all.begin() + n_train, all.begin() + n_train + n_valid);
    split.test.assign(all.begin() + n_train + n_valid, all.end());

    // Transductive repair: anything unseen in train moves back to train.
    auto repair = [&](std::vector<IdTriple>& part) {
        std::set<int> ents, rels;
        for (const IdTriple& t : split.train) {
            ents.insert(t[0]);
            ents.insert(t[2]);
            rels.insert(t[1]);
        }
        std::vector<IdTriple> kept;
        for (const IdTriple& t : part) {
            if (ents.count(t[0]) && ents.count(t[2]) && rels.count(t[1])) {
                kept.push_back(t);
            } else {
                split.train.push_back(t);
                ents.insert(t[0]);
                ents.insert(t[2]);
                rels.insert(t[1]);
            }
        }
        part = std::move(kept);
    };
    repair(split.valid);
    repair(split.test);

    if (n > 0 && (split.valid.empty() || split.test.empty())) throw UnsatisfiableSplit();
    return split;
}

void KnowledgeGraph::export_tsv(const std::string& path, bool with_types) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write graph: " + path);
    for (const KgTriple& t : triples_) {
        out << entity_display_[t.head] << '\t' << relation_names_[t.rel] << '\t'
            << entity_display_[t.tail];
        if (with_types) {
            // Dominant observed type (highest count, ties by enum order).
            auto dominant = [&](int ent) -> std::string {
                const auto& types = entity_types_[ent];
                std::string best;
                int best_count = 0;
                for (const auto& [type, count] : types) {
                    if (count > best_count) {
                        best = std::string(ontology::entity_type_name(type));
                        best_count = count;
                    }
                }
                return best;
            };
            out << '\t' << dominant(t.head) << '\t' << dominant(t.tail);
        }
        out << '\n';
    }
}

KnowledgeGraph KnowledgeGraph::import_tsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open graph: " + path);
    KnowledgeGraph g;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        for (size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 3 && fields.size() != 5)
            throw MalformedLine(line_no, "expected 3 or 5 tab-separated fields, got " +
                                             std::to_string(fields.size()));
        int h = g.add_entity(fields[0]);
        int r = g.add_relation(fields[1]);
        int t = g.add_entity(fields[2]);
        g.add_triple(h, r, t);
        if (fields.size() == 5) {
            if (!fields[3].empty())
                g.entity_types_[h][ontology::parse_entity_type(fields[3])] += 1;
            if (!fields[4].empty())
                g.entity_types_[t][ontology::parse_entity_type(fields[4])] += 1;
        }
    }
    return g;
}

bool graphs_equal(const KnowledgeGraph& a, const KnowledgeGraph& b) {
    if (a.entity_count() != b.entity_count() || a.relation_count() != b.relation_count() ||
        a.triple_count() != b.triple_count())
        return false;
    std::set<std::string> sa, sb;
    auto collect = [](const KnowledgeGraph& g, std::set<std::string>& out) {
        for (const KgTriple& t : g.triples())
            out.insert(util::to_lower(g.entity_name(t.head)) + '\t' + g.relation_name(t.rel) +
                       '\t' + util::to_lower(g.entity_name(t.tail)));
    };
    collect(a, sa);
    collect(b, sb);
    return sa == sb;
}

void save_id_triples_tsv(const std::string& path, const std::vector<IdTriple>& triples,
                         const KnowledgeGraph& kg) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write triples: " + path);
    for (const IdTriple& t : triples)
        out << kg.entity_name(t[0]) << '\t' << kg.relation_name(t[1]) << '\t'
            << kg.entity_name(t[2]) << '\n';
}

}  // namespace ctikg::kg
