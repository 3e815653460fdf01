#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ctikg::config {

inline constexpr const char* kToolVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Minimal key-value config: [section] headers, `key = value` lines,
// `#` comments, optional quoting, comma-separated lists. Unknown
// section/key pairs are rejected at load time.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig from_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback = "") const;
    long get_int(const std::string& section, const std::string& key, long fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    std::vector<long> get_int_list(const std::string& section, const std::string& key) const;

    // FNV fingerprint of the canonicalized contents.
    std::string fingerprint() const;

    const std::map<std::pair<std::string, std::string>, std::string>& entries() const {
        return entries_;
    }

private:
    std::map<std::pair<std::string, std::string>, std::string> entries_;
};

// Validates every (section, key) against the known pipeline keys.
void validate_pipeline_keys(const KeyValueConfig& cfg);

// Stage manifests: input/config fingerprints that make reruns skippable.
struct Manifest {
    std::string stage;
    std::string tool_version;
    std::string config_hash;
    std::map<std::string, std::string> inputs;   // path -> content hash
    std::map<std::string, std::string> outputs;  // path -> content hash
};

std::string hash_file(const std::string& path);

void write_manifest(const std::string& manifest_path, const Manifest& m);
std::optional<Manifest> read_manifest(const std::string& manifest_path);

// True when a manifest exists whose config hash and input/output hashes all
// still match the filesystem.
bool stage_up_to_date(const std::string& manifest_path, const std::string& config_hash,
                      const std::vector<std::string>& inputs);

}  // namespace ctikg::config
