// ctikg: CTI extraction pipeline driver. Every stage reads the previous
// stage's artifacts from the output directory, writes its own plus a
// manifest, and can run standalone.

#include "ctikg/config.hpp"
#include "ctikg/corpus.hpp"
#include "ctikg/kg.hpp"
#include "ctikg/linkpred.hpp"
#include "ctikg/llm_client.hpp"
#include "ctikg/ontology.hpp"
#include "ctikg/postprocess.hpp"
#include "ctikg/prompting.hpp"
#include "ctikg/rouge.hpp"
#include "ctikg/triple_parser.hpp"
#include "ctikg/util.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ctikg;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = "out";
    bool force = false;
    std::optional<uint64_t> seed;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<int> concurrency;
    std::optional<std::string> template_name;
    std::optional<std::string> stop_pattern;
};

struct MissingInput : std::runtime_error {
    explicit MissingInput(const std::string& path)
        : std::runtime_error("missing stage input: " + path) {}
};

config::KeyValueConfig load_config(const CliOptions& opt) {
    if (opt.config_path.empty()) return config::KeyValueConfig::parse("");
    auto cfg = config::KeyValueConfig::from_file(opt.config_path);
    config::validate_pipeline_keys(cfg);
    return cfg;
}

std::string out_path(const CliOptions& opt, const std::string& name) {
    return (fs::path(opt.out_dir) / name).string();
}

void require_input(const std::string& path) {
    if (!fs::exists(path)) throw MissingInput(path);
}

// Stage wrapper: manifest-based skip, output hashing.
int run_stage(const CliOptions& opt, const config::KeyValueConfig& cfg, const std::string& stage,
              const std::vector<std::string>& inputs,
              const std::function<std::vector<std::string>()>& body) {
    fs::create_directories(opt.out_dir);
    const std::string manifest_path = out_path(opt, stage + ".manifest.json");
    const std::string config_hash = cfg.fingerprint();
    if (!opt.force && config::stage_up_to_date(manifest_path, config_hash, inputs)) {
        std::cout << stage << ": up to date\n";
        return 0;
    }
    for (const std::string& in : inputs) require_input(in);

    std::vector<std::string> outputs = body();

    config::Manifest m;
    m.stage = stage;
    m.tool_version = config::kToolVersion;
    m.config_hash = config_hash;
    for (const std::string& in : inputs) m.inputs[in] = config::hash_file(in);
    for (const std::string& out : outputs) m.outputs[out] = config::hash_file(out);
    config::write_manifest(manifest_path, m);
    std::cout << stage << ": done (" << outputs.size() << " artifacts)\n";
    return 0;
}

llm::GenerationParams params_from_config(const config::KeyValueConfig& cfg,
                                         const CliOptions& opt) {
    llm::GenerationParams params;
    params.temperature = cfg.get_double("llm", "temperature", 0.6);
    params.repetition_penalty = cfg.get_double("llm", "repetition_penalty", 1.1);
    params.max_tokens = static_cast<int>(cfg.get_int("llm", "max_tokens", 2048));
    params.decoding = llm::Decoding::parse(cfg.get_string("llm", "decoding", "greedy"));
    params.decoding.beam_width = static_cast<int>(cfg.get_int("llm", "beam_width", 4));
    std::string stop = opt.stop_pattern.value_or(cfg.get_string("llm", "stop_pattern", ""));
    if (!stop.empty()) params.stop_pattern = stop;
    if (cfg.has("llm", "seed"))
        params.seed = static_cast<uint64_t>(cfg.get_int("llm", "seed", 0));
    return params;
}

llm::Endpoint endpoint_from_config(const config::KeyValueConfig& cfg, const CliOptions& opt) {
    llm::Endpoint ep;
    ep.model = opt.model.value_or(cfg.get_string("llm", "model", "default-model"));
    ep.token_env = cfg.get_string("llm", "token_env", "CTIKG_API_TOKEN");
    ep.timeout_ms = static_cast<int>(cfg.get_int("llm", "timeout_ms", 30000));
    ep.supports_best_of = cfg.get_bool("llm", "supports_best_of", false);
    return ep;
}

ontology::OntologySchema schema_from_config(const config::KeyValueConfig& cfg) {
    std::string schema_file = cfg.get_string("filter", "schema_file", "");
    return schema_file.empty() ? ontology::OntologySchema::standard()
                               : ontology::OntologySchema::from_file(schema_file);
}

// ---------------------------------------------------------------------------
// Stages

int cmd_chunk(const CliOptions& opt, const config::KeyValueConfig& cfg) {
    const std::string docs = cfg.get_string("corpus", "docs", "");
    if (docs.empty()) throw config::ConfigError("corpus.docs is required for `chunk`");
    std::vector<std::string> inputs;
    if (fs::is_directory(docs)) {
        for (const auto& e : fs::directory_iterator(docs))
            if (e.is_regular_file() && e.path().extension() == ".txt")
                inputs.push_back(e.path().string());
        std::sort(inputs.begin(), inputs.end());
    } else {
        inputs.push_back(docs);
    }
    return run_stage(opt, cfg, "chunk", inputs, [&] {
        const int budget = static_cast<int>(cfg.get_int("corpus", "chunk_budget", 1000));
        std::vector<corpus::Paragraph> all;
        for (const corpus::Document& doc : corpus::load_documents(docs))
            for (corpus::Paragraph& p : corpus::chunk_document(doc, budget))
                all.push_back(std::move(p));
        const std::string out = out_path(opt, "paragraphs.jsonl");
        corpus::save_paragraphs_jsonl(out, all);
        return std::vector<std::string>{out};
    });
}

int cmd_extract(const CliOptions& opt, const config::KeyValueConfig& cfg) {
    const std::string paragraphs_path = out_path(opt, "paragraphs.jsonl");
    return run_stage(opt, cfg, "extract", {paragraphs_path}, [&] {
        auto paragraphs = corpus::load_paragraphs_jsonl(paragraphs_path);
        const std::string tmpl_name =
            opt.template_name.value_or(cfg.get_string("prompting", "template", "minimal_zeroshot"));
        prompting::PromptTemplate tmpl;
        const std::string templates_file = cfg.get_string("prompting", "templates_file", "");
        bool found = false;
        if (!templates_file.empty()) {
            for (auto& t : prompting::load_templates(templates_file))
                if (t.name == tmpl_name) {
                    tmpl = std::move(t);
                    found = true;
                    break;
                }
        }
        if (!found) tmpl = prompting::get_template(tmpl_name);

        const std::string descriptor =
            opt.endpoint.value_or(cfg.get_string("llm", "endpoint", ""));
        if (descriptor.empty())
            throw config::ConfigError("llm.endpoint (or --endpoint) is required for `extract`");
        auto backend = llm::make_backend(descriptor, endpoint_from_config(cfg, opt));
        llm::GenerationParams params = params_from_config(cfg, opt);

        llm::BatchOptions batch;
        batch.concurrency =
            opt.concurrency.value_or(static_cast<int>(cfg.get_int("llm", "concurrency", 4)));
        // The journal absorbs crashes; the ordered file below is the artifact.
        const std::string journal = out_path(opt, "completions.partial.jsonl");
        batch.results_path = journal;

        auto results = llm::batch_extract(*backend, paragraphs, tmpl, params, batch);

        const std::string out = out_path(opt, "completions.jsonl");
        std::ofstream f(out, std::ios::trunc);
        size_t failures = 0;
        for (const llm::ExtractionResult& r : results) {
            json j;
            j["doc_id"] = r.paragraph.doc_id;
            j["index"] = r.paragraph.index;
            if (r.error) {
                j["error"] = *r.error;
                ++failures;
            } else {
                j["output"] = r.output;
            }
            f << j.dump() << "\n";
        }
        f.close();
        fs::remove(journal);
        if (failures)
            std::cerr << "extract: " << failures << "/" << results.size()
                      << " paragraphs failed (recorded in completions.jsonl)\n";
        return std::vector<std::string>{out};
    });
}

int cmd_parse(const CliOptions& opt, const config::KeyValueConfig& cfg) {
    const std::string completions = out_path(opt, "completions.jsonl");
    return run_stage(opt, cfg, "parse", {completions}, [&] {
        auto results = llm::load_extraction_results(completions);
        std::vector<ontology::TypedTriple> all;
        json report_json = json::array();
        for (const llm::ExtractionResult& r : results) {
            if (r.error) continue;
            parser::ParseReport report = parser::parse_triples(r.output);
            for (parser::ParsedTriple& p : report.parsed) {
                p.triple.provenance =
                    ontology::Provenance{r.paragraph.doc_id, r.paragraph.index};
                all.push_back(p.triple);
            }
            json jr;
            jr["doc_id"] = r.paragraph.doc_id;
            jr["index"] = r.paragraph.index;
            jr["triples"] = report.parsed.size();
            jr["rejected"] = report.rejected_lines.size();
            jr["shapes"] = report.shape_stats;
            report_json.push_back(std::move(jr));
        }
        const std::string out = out_path(opt, "triples.jsonl");
        corpus::save_triples_jsonl(out, all);
        const std::string report_path = out_path(opt, "parse_report.json");
        util::write_file(report_path, report_json.dump(2) + "\n");
        return std::vector<std::string>{out, report_path};
    });
}

int cmd_filter(const CliOptions& opt, const config::KeyValueConfig& cfg) {
    const std::string triples_path = out_path(opt, "triples.jsonl");
    return run_stage(opt, cfg, "filter", {triples_path}, [&] {
        auto triples = corpus::load_triples_jsonl(triples_path);
        ontology::OntologySchema schema = schema_from_config(cfg);
        const int min_mentions = static_cast<int>(cfg.get_int("filter", "min_mentions", 5));

        std::vector<postprocess::FilterRule> rules;
        auto names = cfg.get_list("filter", "rules");
        if (names.empty()) {
            rules = postprocess::default_pipeline(schema, min_mentions);
        } else {
            for (const std::string& name : names)
                rules.push_back(postprocess::rule_by_name(name, schema, min_mentions));
        }

        auto [survivors, report] = postprocess::run_pipeline(triples, rules);
        const std::string out = out_path(opt, "triples_filtered.jsonl");
        corpus::save_triples_jsonl(out, survivors);
        const std::string report_json = out_path(opt, "filter_report.json");
        util::write_file(report_json, report.to_json() + "\n");
        const std::string report_txt = out_path(opt, "filter_report.txt");
        util::write_file(report_txt, report.to_table());
        return std::vector<std::string>{out, report_json, report_txt};
    });
}

int cmd_eval_rouge(const CliOptions& opt, const config::KeyValueConfig& cfg,
                   const std::string& candidate_file, const std::string& reference_file) {
    // Standalone mode: score one candidate/reference pair directly.
    if (!candidate_file.empty() || !reference_file.empty()) {
        if (candidate_file.empty() || reference_file.empty())
            throw config::ConfigError("--candidate and --reference must be given together");
        require_input(candidate_file);
        require_input(reference_file);
        auto cand = corpus::load_triples_jsonl(candidate_file);
        auto ref = corpus::load_triples_jsonl(reference_file);
        auto scores = rouge::evaluate_extraction(cand, ref);
        std::printf("metric   precision  recall  f1\n");
        for (const auto& [n, s] : scores.by_n)
            std::printf("ROUGE-%d  %.4f     %.4f  %.4f\n", n, s.precision, s.recall, s.f1);
        std::printf("ROUGE-L  %.4f     %.4f  %.4f\n", scores.lcs.precision, scores.lcs.recall,
                    scores.lcs.f1);
        return 0;
    }

    const std::string triples_path = out_path(opt, "triples.jsonl");
    const std::string paragraphs_path = out_path(opt, "paragraphs.jsonl");
    const std::string annotations = cfg.get_string("corpus", "annotations", "");
    if (annotations.empty())
        throw config::ConfigError("corpus.annotations is required for `eval-rouge`");
    return run_stage(opt, cfg, "eval-rouge", {triples_path, paragraphs_path, annotations}, [&] {
        auto candidates = corpus::load_triples_jsonl(triples_path);
        auto paragraphs = corpus::load_paragraphs_jsonl(paragraphs_path);
        auto annot = corpus::load_triples_jsonl(annotations);
        auto examples = corpus::match_annotations(paragraphs, annot);

        std::set<int> ns;
        for (long n : cfg.get_int_list("rouge", "ns")) ns.insert(static_cast<int>(n));
        if (ns.empty()) ns = {1, 2, 3, 6};

        // Candidate triples grouped by paragraph provenance.
        std::map<std::pair<std::string, int>, std::vector<ontology::TypedTriple>> by_para;
        for (const ontology::TypedTriple& t : candidates)
            if (t.provenance)
                by_para[{t.provenance->doc_id, t.provenance->paragraph_index}].push_back(t);

        std::vector<rouge::ExtractionScores> all_scores;
        std::ostringstream csv;
        csv << "doc_id,paragraph";
        for (int n : ns)
            csv << ",rouge" << n << "_precision,rouge" << n << "_recall,rouge" << n << "_f1";
        csv << ",rougeL_precision,rougeL_recall,rougeL_f1\n";
        for (const corpus::AnnotatedExample& ex : examples) {
            auto it = by_para.find({ex.paragraph.doc_id, ex.paragraph.index});
            std::vector<ontology::TypedTriple> cand =
                it == by_para.end() ? std::vector<ontology::TypedTriple>{} : it->second;
            auto scores = rouge::evaluate_extraction(cand, ex.reference_triples, ns);
            all_scores.push_back(scores);
            csv << ex.paragraph.doc_id << "," << ex.paragraph.index;
            char buf[64];
            for (int n : ns) {
                const auto& s = scores.by_n.at(n);
                std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f", s.precision, s.recall, s.f1);
                csv << buf;
            }
            std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f\n", scores.lcs.precision,
                          scores.lcs.recall, scores.lcs.f1);
            csv << buf;
        }
        const std::string csv_path = out_path(opt, "rouge_per_example.csv");
        util::write_file(csv_path, csv.str());

        json summary;
        summary["examples"] = all_scores.size();
        if (!all_scores.empty()) {
            auto agg = rouge::aggregate(all_scores);
            auto fom = rouge::aggregate_f1_of_means(all_scores);
            json mean;
            for (const auto& [n, s] : agg.by_n) {
                mean["rouge" + std::to_string(n)] = {
                    {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
            }
            mean["rougeL"] = {{"precision", agg.lcs.precision},
                              {"recall", agg.lcs.recall},
                              {"f1", agg.lcs.f1}};
            summary["mean_of_f1"] = mean;
            json alt;
            for (const auto& [n, s] : fom.by_n) alt["rouge" + std::to_string(n)] = s.f1;
            alt["rougeL"] = fom.lcs.f1;
            summary["f1_of_means"] = alt;
        }
        const std::string summary_path = out_path(opt, "rouge_summary.json");
        util::write_file(summary_path, summary.dump(2) + "\n");
        return std::vector<std::string>{csv_path, summary_path};
    });
}

int cmd_kg_build(const CliOptions& opt, const config::KeyValueConfig& cfg) {
    const std::string triples_path = out_path(opt, "triples_filtered.jsonl");
    return run_stage(opt, cfg, "kg-build", {triples_path}, [&] {
        auto triples = corpus::load_triples_jsonl(triples_path);
        kg::KnowledgeGraph graph = kg::KnowledgeGraph::build(triples);
        const std::string tsv = out_path(opt, "kg.tsv");
        graph.export_tsv(tsv, /*with_types=*/false);
        const std::string typed_tsv = out_path(opt, "kg_typed.tsv");
        graph.export_tsv(typed_tsv, /*with_types=*/true);
        const std::string stats = out_path(opt, "kg_stats.json");
        util::write_file(stats, graph.stats().to_json() + "\n");
        // Provenance sidecar keyed by triple.
        const std::string prov = out_path(opt, "kg_provenance.jsonl");
        std::ofstream pf(prov, std::ios::trunc);
        for (const kg::KgTriple& t : graph.triples()) {
            json j;
            j["head"] = graph.entity_name(t.head);
            j["relation"] = graph.relation_name(t.rel);
            j["tail"] = graph.entity_name(t.tail);
            j["count"] = t.count;
            json sources = json::array();
            for (const auto& p : t.provenance)
                sources.push_back({{"doc_id", p.doc_id}, {"paragraph_index", p.paragraph_index}});
            j["sources"] = sources;
            pf << j.dump() << "\n";
        }
        pf.close();
        return std::vector<std::string>{tsv, typed_tsv, stats, prov};
    });
}

int cmd_kg_split(const CliOptions& opt, const config::KeyValueConfig& cfg) {
    const std::string tsv = out_path(opt, "kg.tsv");
    return run_stage(opt, cfg, "kg-split", {tsv}, [&] {
        kg::KnowledgeGraph graph = kg::KnowledgeGraph::import_tsv(tsv);
        auto ratios_cfg = cfg.get_int_list("lp", "split");
        std::array<int, 3> ratios = {80, 10, 10};
        if (ratios_cfg.size() == 3)
            ratios = {static_cast<int>(ratios_cfg[0]), static_cast<int>(ratios_cfg[1]),
                      static_cast<int>(ratios_cfg[2])};
        const uint64_t seed =
            opt.seed.value_or(static_cast<uint64_t>(cfg.get_int("output", "seed", 7)));
        kg::LPSplit split = graph.split_for_lp(ratios, seed);
        const std::string train = out_path(opt, "lp_train.tsv");
        const std::string valid = out_path(opt, "lp_valid.tsv");
        const std::string test = out_path(opt, "lp_test.tsv");
        kg::save_id_triples_tsv(train, split.train, graph);
        kg::save_id_triples_tsv(valid, split.valid, graph);
        kg::save_id_triples_tsv(test, split.test, graph);
        return std::vector<std::string>{train, valid, test};
    });
}

linkpred::TrainConfig train_config_from(const config::KeyValueConfig& cfg,
                                        const CliOptions& opt) {
    linkpred::TrainConfig tc;
    tc.d_e = static_cast<int>(cfg.get_int("lp", "d_e", 50));
    tc.d_r = static_cast<int>(cfg.get_int("lp", "d_r", 50));
    tc.batch_size = static_cast<int>(cfg.get_int("lp", "batch_size", 64));
    tc.learning_rate = cfg.get_double("lp", "learning_rate", 0.001);
    tc.epochs = static_cast<int>(cfg.get_int("lp", "epochs", 500));
    tc.label_smoothing = cfg.get_double("lp", "label_smoothing", 0.1);
    tc.input_dropout = cfg.get_double("lp", "input_dropout", 0.3);
    tc.hidden_dropout1 = cfg.get_double("lp", "hidden_dropout1", 0.4);
    tc.hidden_dropout2 = cfg.get_double("lp", "hidden_dropout2", 0.5);
    tc.train_both_directions = cfg.get_bool("lp", "train_both_directions", true);
    tc.negatives = static_cast<int>(cfg.get_int("lp", "negatives", 10));
    const std::string strategy = cfg.get_string("lp", "strategy", "one_to_n");
    tc.strategy = strategy == "neg_sampling" ? linkpred::TrainStrategy::NegSampling
                                             : linkpred::TrainStrategy::OneToN;
    const std::string optimizer = cfg.get_string("lp", "optimizer", "adam");
    tc.optimizer = optimizer == "sgd" ? linkpred::Optimizer::Sgd : linkpred::Optimizer::Adam;
    tc.seed = opt.seed.value_or(static_cast<uint64_t>(cfg.get_int("lp", "seed", 20)));
    tc.use_openmp = cfg.get_int("lp", "threads", 0) != 1;
    return tc;
}

// Rebuilds the entity/relation index from the train TSV, then maps a split
// file through it (transductive closure guarantees every id resolves).
std::vector<kg::IdTriple> map_split(const kg::KnowledgeGraph& graph, const std::string& path) {
    kg::KnowledgeGraph part = kg::KnowledgeGraph::import_tsv(path);
    std::vector<kg::IdTriple> out;
    for (const kg::KgTriple& t : part.triples()) {
        auto h = graph.find_entity(part.entity_name(t.head));
        auto r = graph.find_relation(part.relation_name(t.rel));
        auto tl = graph.find_entity(part.entity_name(t.tail));
        if (!h || !r || !tl)
            throw std::runtime_error(path + ": entity or relation unseen in training graph");
        out.push_back({*h, *r, *tl});
    }
    return out;
}

int cmd_lp_train(const CliOptions& opt, const config::KeyValueConfig& cfg) {
    const std::string train_tsv = out_path(opt, "lp_train.tsv");
    return run_stage(opt, cfg, "lp-train", {train_tsv}, [&] {
        kg::KnowledgeGraph graph = kg::KnowledgeGraph::import_tsv(train_tsv);
        linkpred::TrainConfig tc = train_config_from(cfg, opt);
        auto result = linkpred::train(graph.id_triples(), static_cast<int>(graph.entity_count()),
                                      static_cast<int>(graph.relation_count()), tc);
        const std::string ckpt = out_path(opt, "tucker.ckpt");
        result.model.save(ckpt);
        std::ostringstream trace;
        trace << "epoch,loss\n";
        char buf[64];
        for (size_t i = 0; i < result.loss_trace.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.9f\n", i, result.loss_trace[i]);
            trace << buf;
        }
        const std::string trace_path = out_path(opt, "loss_trace.csv");
        util::write_file(trace_path, trace.str());
        return std::vector<std::string>{ckpt, trace_path};
    });
}

int cmd_lp_eval(const CliOptions& opt, const config::KeyValueConfig& cfg, bool raw_flag,
                const std::string& ranks_file) {
    using linkpred::RankSetting;
    const RankSetting setting =
        raw_flag || cfg.get_string("lp", "setting", "filtered") == "raw" ? RankSetting::Raw
                                                                         : RankSetting::Filtered;

    // External rank files let third-party models reuse the report rendering.
    if (!ranks_file.empty()) {
        require_input(ranks_file);
        std::ifstream in(ranks_file);
        std::vector<int> head_ranks, tail_ranks;
        std::string line;
        while (std::getline(in, line)) {
            if (util::trim(line).empty()) continue;
            json j = json::parse(line);
            const std::string dir = j.at("direction").get<std::string>();
            const int rank = j.at("rank").get<int>();
            if (rank < 1) throw std::runtime_error("ranks must be >= 1");
            (dir == "head" ? head_ranks : tail_ranks).push_back(rank);
        }
        auto report = linkpred::report_from_ranks(head_ranks, tail_ranks, setting);
        std::cout << report.to_table();
        fs::create_directories(opt.out_dir);
        util::write_file(out_path(opt, "lp_report.json"), report.to_json() + "\n");
        util::write_file(out_path(opt, "lp_report.txt"), report.to_table());
        return 0;
    }

    const std::string ckpt = out_path(opt, "tucker.ckpt");
    const std::string train_tsv = out_path(opt, "lp_train.tsv");
    const std::string valid_tsv = out_path(opt, "lp_valid.tsv");
    const std::string test_tsv = out_path(opt, "lp_test.tsv");
    return run_stage(opt, cfg, "lp-eval", {ckpt, train_tsv, valid_tsv, test_tsv}, [&] {
        kg::KnowledgeGraph graph = kg::KnowledgeGraph::import_tsv(train_tsv);
        linkpred::TuckerModel model = linkpred::TuckerModel::load(ckpt);
        auto train_ids = graph.id_triples();
        auto valid_ids = map_split(graph, valid_tsv);
        auto test_ids = map_split(graph, test_tsv);
        std::vector<kg::IdTriple> known = train_ids;
        known.insert(known.end(), valid_ids.begin(), valid_ids.end());
        known.insert(known.end(), test_ids.begin(), test_ids.end());
        auto report =
            linkpred::evaluate(model, test_ids, linkpred::make_triple_set(known), setting);
        std::cout << report.to_table();
        const std::string rj = out_path(opt, "lp_report.json");
        util::write_file(rj, report.to_json() + "\n");
        const std::string rt = out_path(opt, "lp_report.txt");
        util::write_file(rt, report.to_table());
        return std::vector<std::string>{rj, rt};
    });
}

int cmd_report(const CliOptions& opt) {
    const std::string rouge_summary = out_path(opt, "rouge_summary.json");
    const std::string lp_report = out_path(opt, "lp_report.json");
    if (!fs::exists(rouge_summary) && !fs::exists(lp_report))
        throw MissingInput(rouge_summary + " or " + lp_report);

    std::ostringstream out;
    if (fs::exists(rouge_summary)) {
        json j = json::parse(util::read_file(rouge_summary));
        out << "extraction quality (ROUGE F1, mean over " << j["examples"].get<size_t>()
            << " examples)\n";
        out << "run         ROUGE-1  ROUGE-2  ROUGE-3  ROUGE-6  ROUGE-L\n";
        if (j.contains("mean_of_f1")) {
            const json& m = j["mean_of_f1"];
            auto f1 = [&](const std::string& key) {
                return m.contains(key) ? m[key]["f1"].get<double>() : 0.0;
            };
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%-10s  %.4f   %.4f   %.4f   %.4f   %.4f\n",
                          "extract", f1("rouge1"), f1("rouge2"), f1("rouge3"), f1("rouge6"),
                          f1("rougeL"));
            out << buf;
        }
        out << "\n";
    }
    if (fs::exists(lp_report)) {
        json j = json::parse(util::read_file(lp_report));
        out << "link prediction (" << j["setting"].get<std::string>() << " ranking)\n";
        out << "block   H@3     H@10    H@30    MRR\n";
        for (const char* block : {"Head", "Tail", "Both"}) {
            const json& b = j[util::to_lower(block)];
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%-6s  %.4f  %.4f  %.4f  %.4f\n", block,
                          b["hits@3"].get<double>(), b["hits@10"].get<double>(),
                          b["hits@30"].get<double>(), b["mrr"].get<double>());
            out << buf;
        }
    }
    fs::create_directories(opt.out_dir);
    const std::string path = out_path(opt, "report.txt");
    util::write_file(path, out.str());
    std::cout << out.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CTI triple extraction, evaluation, and link prediction pipeline"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "pipeline config file");
    app.add_option("--out", opt.out_dir, "output directory (default: out)");
    app.add_flag("--force", opt.force, "rerun even when the stage manifest is up to date");
    uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "override the configured seed");
    std::string endpoint, model, template_name, stop_pattern;
    int concurrency = 0;
    auto* endpoint_opt = app.add_option("--endpoint", endpoint, "endpoint URL or replay:<path>");
    auto* model_opt = app.add_option("--model", model, "model name sent to the endpoint");
    auto* conc_opt = app.add_option("--concurrency", concurrency, "max in-flight requests");
    auto* tmpl_opt = app.add_option("--template", template_name, "prompt template name");
    auto* stop_opt = app.add_option("--stop-pattern", stop_pattern, "stop regex for truncation");

    app.add_subcommand("chunk", "split corpus documents into token-budgeted paragraphs");
    app.add_subcommand("extract", "run the LLM over paragraphs");
    app.add_subcommand("parse", "parse raw completions into triples");
    app.add_subcommand("filter", "apply the post-processing filter pipeline");
    auto* eval_rouge = app.add_subcommand("eval-rouge", "score extractions with ROUGE");
    std::string candidate_file, reference_file;
    eval_rouge->add_option("--candidate", candidate_file, "candidate triples JSONL (standalone)");
    eval_rouge->add_option("--reference", reference_file, "reference triples JSONL (standalone)");
    app.add_subcommand("kg-build", "build the knowledge graph from filtered triples");
    app.add_subcommand("kg-split", "split the graph for link prediction");
    app.add_subcommand("lp-train", "train the TuckER embedding model");
    auto* lp_eval = app.add_subcommand("lp-eval", "rank-based link prediction evaluation");
    bool raw_flag = false, filtered_flag = false;
    lp_eval->add_flag("--raw", raw_flag, "raw ranking");
    lp_eval->add_flag("--filtered", filtered_flag, "filtered ranking (default)");
    std::string ranks_file;
    lp_eval->add_option("--ranks-file", ranks_file, "JSONL of externally computed ranks");
    app.add_subcommand("report", "render the ROUGE and link-prediction tables");

    CLI11_PARSE(app, argc, argv);

    if (*seed_opt) opt.seed = seed_val;
    if (*endpoint_opt) opt.endpoint = endpoint;
    if (*model_opt) opt.model = model;
    if (*conc_opt) opt.concurrency = concurrency;
    if (*tmpl_opt) opt.template_name = template_name;
    if (*stop_opt) opt.stop_pattern = stop_pattern;

    try {
        config::KeyValueConfig cfg = load_config(opt);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "chunk") return cmd_chunk(opt, cfg);
        if (sub == "extract") return cmd_extract(opt, cfg);
        if (sub == "parse") return cmd_parse(opt, cfg);
        if (sub == "filter") return cmd_filter(opt, cfg);
        if (sub == "eval-rouge") return cmd_eval_rouge(opt, cfg, candidate_file, reference_file);
        if (sub == "kg-build") return cmd_kg_build(opt, cfg);
        if (sub == "kg-split") return cmd_kg_split(opt, cfg);
        if (sub == "lp-train") return cmd_lp_train(opt, cfg);
        if (sub == "lp-eval") return cmd_lp_eval(opt, cfg, raw_flag, ranks_file);
        if (sub == "report") return cmd_report(opt);
        std::cerr << "unknown subcommand: " << sub << "\n";
        return 2;
    } catch (const std::exception& e) {
        json err;
        err["error"] = {{"type", typeid(e).name()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
