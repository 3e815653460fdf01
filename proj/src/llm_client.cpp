#include "ctikg/llm_client.hpp"

#include "ctikg/util.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

using json = nlohmann::json;

namespace ctikg::llm {

Decoding Decoding::parse(const std::string& name) {
    std::string k = util::to_lower(util::trim(name));
    Decoding d;
    if (k == "greedy") d.kind = DecodingKind::Greedy;
    else if (k == "beam_search" || k == "beam") d.kind = DecodingKind::BeamSearch;
    else if (k == "multinomial" || k == "sampling") d.kind = DecodingKind::Multinomial;
    else if (k == "beam_multinomial") d.kind = DecodingKind::BeamMultinomial;
    else throw std::runtime_error("unknown decoding strategy: " + name);
    return d;
}

std::string Decoding::name() const {
    switch (kind) {
        case DecodingKind::Greedy: return "greedy";
        case DecodingKind::BeamSearch: return "beam_search";
        case DecodingKind::Multinomial: return "multinomial";
        case DecodingKind::BeamMultinomial: return "beam_multinomial";
    }
    return "greedy";
}

std::string GenerationParams::canonical_json() const {
    json j;
    j["temperature"] = temperature;
    j["repetition_penalty"] = repetition_penalty;
    j["max_tokens"] = max_tokens;
    j["decoding"] = decoding.name();
    if (decoding.kind == DecodingKind::BeamSearch || decoding.kind == DecodingKind::BeamMultinomial)
        j["beam_width"] = decoding.beam_width;
    if (stop_pattern) j["stop_pattern"] = *stop_pattern;
    if (seed) j["seed"] = *seed;
    return j.dump();  // nlohmann objects are key-sorted, so this is stable
}

std::string apply_stop_pattern(const std::string& raw, const std::string& pattern) {
    std::regex re;
    try {
        re = std::regex(pattern);
    } catch (const std::regex_error& e) {
        throw ClientError(ClientError::Kind::BadPattern,
                          "bad stop pattern '" + pattern + "': " + e.what());
    }
    std::smatch m;
    if (std::regex_search(raw, m, re))
        return raw.substr(0, static_cast<size_t>(m.position(0)));
    return raw;
}

// ---------------------------------------------------------------------------
// HTTP backend

HttpBackend::HttpBackend(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpBackend::request_body(const Endpoint& endpoint, const std::string& prompt,
                                      const GenerationParams& params) {
    json body;
    body["model"] = endpoint.model;
    body["prompt"] = prompt;
    body["max_tokens"] = params.max_tokens;
    body["repetition_penalty"] = params.repetition_penalty;
    body["decoding"] = params.decoding.name();
    switch (params.decoding.kind) {
        case DecodingKind::Greedy:
            body["temperature"] = 0.0;
            break;
        case DecodingKind::Multinomial:
            body["temperature"] = params.temperature;
            break;
        case DecodingKind::BeamSearch:
        case DecodingKind::BeamMultinomial:
            if (!endpoint.supports_best_of)
                throw ClientError(ClientError::Kind::UnsupportedDecoding,
                                  "endpoint does not support beam decoding (" +
                                      params.decoding.name() + ")");
            body["best_of"] = params.decoding.beam_width;
            body["temperature"] =
                params.decoding.kind == DecodingKind::BeamSearch ? 0.0 : params.temperature;
            break;
    }
    if (params.seed) body["seed"] = *params.seed;
    return body.dump();
}

std::string HttpBackend::complete(const std::string& prompt, const GenerationParams& params) {
    const std::string body = request_body(endpoint_, prompt, params);

    httplib::Client cli(endpoint_.base_url);
    cli.set_connection_timeout(0, endpoint_.timeout_ms * 1000);
    cli.set_read_timeout(endpoint_.timeout_ms / 1000, (endpoint_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (const char* token = std::getenv(endpoint_.token_env.c_str()))
        headers.emplace("Authorization", std::string("Bearer ") + token);

    auto res = cli.Post("/v1/completions", headers, body, "application/json");
    if (!res)
        throw ClientError(ClientError::Kind::Transport,
                          "request to " + endpoint_.base_url + " failed: " +
                              httplib::to_string(res.error()));
    if (res->status != 200)
        throw ClientError(ClientError::Kind::Protocol,
                          "endpoint returned HTTP " + std::to_string(res->status));
    try {
        json j = json::parse(res->body);
        // OpenAI completion shape; accept a bare {"text": ...} too.
        if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty())
            return j["choices"][0].at("text").get<std::string>();
        if (j.contains("text")) return j["text"].get<std::string>();
        throw std::runtime_error("no choices[0].text in response");
    } catch (const ClientError&) {
        throw;
    } catch (const std::exception& e) {
        throw ClientError(ClientError::Kind::Protocol,
                          std::string("malformed completion response: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Record / replay

namespace {

std::string replay_key(const std::string& endpoint_id, const GenerationParams& params,
                       const std::string& prompt) {
    return endpoint_id + '\x1f' + params.canonical_json() + '\x1f' + prompt;
}

}  // namespace

ReplayBackend::ReplayBackend(std::string store_path, std::string endpoint_id)
    : endpoint_id_(std::move(endpoint_id)) {
    std::ifstream in(store_path);
    if (!in) throw std::runtime_error("cannot open replay store: " + store_path);
    std::string line;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        json j = json::parse(line);
        GenerationParams params;
        params.temperature = j["params"].value("temperature", 0.6);
        params.repetition_penalty = j["params"].value("repetition_penalty", 1.1);
        params.max_tokens = j["params"].value("max_tokens", 2048);
        params.decoding = Decoding::parse(j["params"].value("decoding", "greedy"));
        if (j["params"].contains("beam_width"))
            params.decoding.beam_width = j["params"]["beam_width"].get<int>();
        if (j["params"].contains("stop_pattern"))
            params.stop_pattern = j["params"]["stop_pattern"].get<std::string>();
        if (j["params"].contains("seed")) params.seed = j["params"]["seed"].get<uint64_t>();
        records_[replay_key(j.at("endpoint_id").get<std::string>(), params,
                            j.at("prompt").get<std::string>())] =
            j.at("raw_output").get<std::string>();
    }
}

std::string ReplayBackend::complete(const std::string& prompt, const GenerationParams& params) {
    auto it = records_.find(replay_key(endpoint_id_, params, prompt));
    if (it == records_.end())
        throw ClientError(ClientError::Kind::ReplayMiss,
                          "replay store has no record for this (prompt, params) key");
    return it->second;
}

void append_record(const std::string& store_path, const CompletionRecord& rec) {
    json j;
    j["endpoint_id"] = rec.endpoint_id;
    j["prompt"] = rec.prompt;
    j["params"] = json::parse(rec.params.canonical_json());
    j["raw_output"] = rec.raw_output;
    std::ofstream out(store_path, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to replay store: " + store_path);
    out << j.dump() << "\n";
}

RecordingBackend::RecordingBackend(std::unique_ptr<CompletionBackend> inner,
                                   std::string store_path)
    : inner_(std::move(inner)), store_path_(std::move(store_path)) {}

std::string RecordingBackend::complete(const std::string& prompt,
                                       const GenerationParams& params) {
    std::string output = inner_->complete(prompt, params);
    std::lock_guard<std::mutex> lock(write_mutex_);
    append_record(store_path_, {inner_->endpoint_id(), prompt, params, output});
    return output;
}

std::unique_ptr<CompletionBackend> make_backend(const std::string& descriptor,
                                                const Endpoint& endpoint) {
    if (descriptor.rfind("replay:", 0) == 0)
        return std::make_unique<ReplayBackend>(descriptor.substr(7), endpoint.id());
    Endpoint ep = endpoint;
    ep.base_url = descriptor;
    return std::make_unique<HttpBackend>(std::move(ep));
}

// ---------------------------------------------------------------------------
// Batch extraction

namespace {

json result_to_json(const ExtractionResult& r) {
    json j;
    j["doc_id"] = r.paragraph.doc_id;
    j["index"] = r.paragraph.index;
    if (r.error) j["error"] = *r.error;
    else j["output"] = r.output;
    return j;
}

}  // namespace

std::vector<ExtractionResult> load_extraction_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open extraction results: " + path);
    std::vector<ExtractionResult> out;
    std::string line;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        json j = json::parse(line);
        ExtractionResult r;
        r.paragraph.doc_id = j.at("doc_id").get<std::string>();
        r.paragraph.index = j.at("index").get<int>();
        if (j.contains("error")) r.error = j["error"].get<std::string>();
        else r.output = j.value("output", "");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ExtractionResult> batch_extract(CompletionBackend& backend,
                                            const std::vector<corpus::Paragraph>& paragraphs,
                                            const prompting::PromptTemplate& tmpl,
                                            const GenerationParams& params,
                                            const BatchOptions& options) {
    const size_t n = paragraphs.size();
    std::vector<ExtractionResult> results(n);
    std::vector<char> done(n, 0);

    // Resume: items already persisted keep their recorded outcome.
    if (options.results_path) {
        std::ifstream probe(*options.results_path);
        if (probe) {
            for (ExtractionResult& prev : load_extraction_results(*options.results_path)) {
                for (size_t i = 0; i < n; ++i) {
                    if (!done[i] && paragraphs[i].doc_id == prev.paragraph.doc_id &&
                        paragraphs[i].index == prev.paragraph.index) {
                        prev.paragraph = paragraphs[i];
                        results[i] = std::move(prev);
                        done[i] = 1;
                        break;
                    }
                }
            }
        }
    }

    std::mutex io_mutex;
    std::atomic<size_t> next{0};
    const int workers = std::max(1, options.concurrency);

    auto work = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            if (done[i]) continue;
            ExtractionResult r;
            r.paragraph = paragraphs[i];
            try {
                std::string raw = backend.complete(prompting::render_prompt(tmpl, paragraphs[i].text),
                                                   params);
                r.output = params.stop_pattern ? apply_stop_pattern(raw, *params.stop_pattern)
                                               : raw;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
            {
                std::lock_guard<std::mutex> lock(io_mutex);
                if (options.results_path) {
                    std::ofstream out(*options.results_path, std::ios::app);
                    out << result_to_json(r).dump() << "\n";
                }
                if (options.on_result) options.on_result(r);
                results[i] = std::move(r);
            }
        }
    };

    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
    return results;
}

}  // namespace ctikg::llm
