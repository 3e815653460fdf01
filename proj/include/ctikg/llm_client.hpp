#pragma once

#include "ctikg/corpus.hpp"
#include "ctikg/prompting.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctikg::llm {

enum class DecodingKind { Greedy, BeamSearch, Multinomial, BeamMultinomial };

struct Decoding {
    DecodingKind kind = DecodingKind::Greedy;
    int beam_width = 4;  // paper leaves the width unstated

    static Decoding parse(const std::string& name);
    std::string name() const;
};

// Defaults follow the inference setup: temperature 0.6, repetition penalty
// 1.1, context capped at 2048 tokens.
struct GenerationParams {
    double temperature = 0.6;
    double repetition_penalty = 1.1;
    int max_tokens = 2048;
    Decoding decoding;
    std::optional<std::string> stop_pattern;
    std::optional<uint64_t> seed;

    std::string canonical_json() const;  // stable key for record/replay
};

struct Endpoint {
    std::string base_url;  // e.g. "http://127.0.0.1:8080"
    std::string model;
    std::string token_env = "CTIKG_API_TOKEN";
    int timeout_ms = 30000;
    bool supports_best_of = false;  // wire-level beam mapping opt-in

    std::string id() const { return model; }
};

struct CompletionRecord {
    std::string endpoint_id;
    std::string prompt;
    GenerationParams params;
    std::string raw_output;
};

struct ClientError : std::runtime_error {
    enum class Kind { Transport, Protocol, UnsupportedDecoding, ReplayMiss, BadPattern };
    Kind kind;
    ClientError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual std::string complete(const std::string& prompt, const GenerationParams& params) = 0;
    virtual std::string endpoint_id() const = 0;
};

// OpenAI-style JSON completion client ({model, prompt, ...} against
// /v1/completions). Beam decodings map to best_of only when the endpoint
// opts in; otherwise the client refuses rather than silently degrading.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(Endpoint endpoint);
    std::string complete(const std::string& prompt, const GenerationParams& params) override;
    std::string endpoint_id() const override { return endpoint_.id(); }

    static std::string request_body(const Endpoint& endpoint, const std::string& prompt,
                                    const GenerationParams& params);

private:
    Endpoint endpoint_;
};

// Replay store: append-only JSON-Lines of CompletionRecord keyed by
// (endpoint_id, params, prompt).
class ReplayBackend : public CompletionBackend {
public:
    ReplayBackend(std::string store_path, std::string endpoint_id);
    std::string complete(const std::string& prompt, const GenerationParams& params) override;
    std::string endpoint_id() const override { return endpoint_id_; }
    size_t size() const { return records_.size(); }

private:
    std::string endpoint_id_;
    std::unordered_map<std::string, std::string> records_;
};

// Wraps a live backend and appends every completion to the store.
class RecordingBackend : public CompletionBackend {
public:
    RecordingBackend(std::unique_ptr<CompletionBackend> inner, std::string store_path);
    std::string complete(const std::string& prompt, const GenerationParams& params) override;
    std::string endpoint_id() const override { return inner_->endpoint_id(); }

private:
    std::unique_ptr<CompletionBackend> inner_;
    std::string store_path_;
    std::mutex write_mutex_;
};

void append_record(const std::string& store_path, const CompletionRecord& rec);

// Endpoint descriptor string: "replay:<path>" or an http(s) base URL.
std::unique_ptr<CompletionBackend> make_backend(const std::string& descriptor,
                                                const Endpoint& endpoint);

// Returns the prefix of `raw` strictly before the first match of `pattern`;
// `raw` unchanged when nothing matches. Emulates the guidance stop
// criterion ("\n|</s>").
std::string apply_stop_pattern(const std::string& raw, const std::string& pattern);

struct ExtractionResult {
    corpus::Paragraph paragraph;
    std::string output;                // stop-pattern-truncated completion
    std::optional<std::string> error;  // per-item failure; never aborts the batch
};

struct BatchOptions {
    int concurrency = 4;
    // When set, results are appended as they complete and already-present
    // (doc_id, index) pairs are skipped on rerun.
    std::optional<std::string> results_path;
    std::function<void(const ExtractionResult&)> on_result;  // progress hook
};

// One record per paragraph, in input order.
std::vector<ExtractionResult> batch_extract(CompletionBackend& backend,
                                            const std::vector<corpus::Paragraph>& paragraphs,
                                            const prompting::PromptTemplate& tmpl,
                                            const GenerationParams& params,
                                            const BatchOptions& options = {});

std::vector<ExtractionResult> load_extraction_results(const std::string& path);

}  // namespace ctikg::llm
