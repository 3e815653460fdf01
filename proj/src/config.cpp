#include "ctikg/config.hpp"

#include "ctikg/util.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using json = nlohmann::json;

namespace ctikg::config {

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::string section;
    int line_no = 0;
    for (const std::string& raw : util::split_lines(text)) {
        ++line_no;
        std::string line = util::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            section = util::trim(line.substr(1, line.size() - 2));
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected `key = value`");
        std::string key = util::trim(line.substr(0, eq));
        std::string value = util::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        cfg.entries_[{section, key}] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
    return parse(util::read_file(path));
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
    return entries_.count({section, key}) > 0;
}

std::string KeyValueConfig::get_string(const std::string& section, const std::string& key,
                                       const std::string& fallback) const {
    auto it = entries_.find({section, key});
    return it == entries_.end() ? fallback : it->second;
}

long KeyValueConfig::get_int(const std::string& section, const std::string& key,
                             long fallback) const {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return fallback;
    try {
        return std::stol(it->second);
    } catch (...) {
        throw ConfigError(section + "." + key + ": not an integer: " + it->second);
    }
}

double KeyValueConfig::get_double(const std::string& section, const std::string& key,
                                  double fallback) const {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw ConfigError(section + "." + key + ": not a number: " + it->second);
    }
}

bool KeyValueConfig::get_bool(const std::string& section, const std::string& key,
                              bool fallback) const {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return fallback;
    std::string v = util::to_lower(it->second);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(section + "." + key + ": not a boolean: " + it->second);
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& section,
                                                  const std::string& key) const {
    auto it = entries_.find({section, key});
    std::vector<std::string> out;
    if (it == entries_.end()) return out;
    std::string value = it->second;
    size_t start = 0;
    while (start <= value.size()) {
        size_t comma = value.find(',', start);
        std::string item = comma == std::string::npos ? value.substr(start)
                                                      : value.substr(start, comma - start);
        item = util::trim(item);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<long> KeyValueConfig::get_int_list(const std::string& section,
                                               const std::string& key) const {
    std::vector<long> out;
    for (const std::string& item : get_list(section, key)) {
        try {
            out.push_back(std::stol(item));
        } catch (...) {
            throw ConfigError(section + "." + key + ": not an integer list item: " + item);
        }
    }
    return out;
}

std::string KeyValueConfig::fingerprint() const {
    std::ostringstream canon;
    for (const auto& [sk, value] : entries_)
        canon << sk.first << '\x1f' << sk.second << '\x1f' << value << '\n';
    return util::fnv1a_hex(canon.str());
}

void validate_pipeline_keys(const KeyValueConfig& cfg) {
    static const std::set<std::pair<std::string, std::string>> known = {
        {"corpus", "docs"},
        {"corpus", "annotations"},
        {"corpus", "chunk_budget"},
        {"corpus", "split_ratio"},
        {"corpus", "split_seed"},
        {"prompting", "template"},
        {"prompting", "templates_file"},
        {"llm", "endpoint"},
        {"llm", "model"},
        {"llm", "concurrency"},
        {"llm", "temperature"},
        {"llm", "repetition_penalty"},
        {"llm", "max_tokens"},
        {"llm", "decoding"},
        {"llm", "beam_width"},
        {"llm", "stop_pattern"},
        {"llm", "seed"},
        {"llm", "token_env"},
        {"llm", "supports_best_of"},
        {"llm", "timeout_ms"},
        {"filter", "rules"},
        {"filter", "min_mentions"},
        {"filter", "schema_file"},
        {"rouge", "ns"},
        {"lp", "split"},
        {"lp", "d_e"},
        {"lp", "d_r"},
        {"lp", "batch_size"},
        {"lp", "learning_rate"},
        {"lp", "epochs"},
        {"lp", "label_smoothing"},
        {"lp", "input_dropout"},
        {"lp", "hidden_dropout1"},
        {"lp", "hidden_dropout2"},
        {"lp", "strategy"},
        {"lp", "negatives"},
        {"lp", "optimizer"},
        {"lp", "train_both_directions"},
        {"lp", "setting"},
        {"lp", "seed"},
        {"lp", "threads"},
        {"output", "dir"},
        {"output", "seed"},
    };
    for (const auto& [sk, value] : cfg.entries()) {
        if (!known.count(sk))
            throw ConfigError("unknown config key: [" + sk.first + "] " + sk.second);
    }
}

std::string hash_file(const std::string& path) {
    return util::fnv1a_hex(util::read_file(path));
}

void write_manifest(const std::string& manifest_path, const Manifest& m) {
    json j;
    j["stage"] = m.stage;
    j["tool_version"] = m.tool_version;
    j["config_hash"] = m.config_hash;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    util::write_file(manifest_path, j.dump(2) + "\n");
}

std::optional<Manifest> read_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) return std::nullopt;
    try {
        json j = json::parse(in);
        Manifest m;
        m.stage = j.at("stage").get<std::string>();
        m.tool_version = j.value("tool_version", "");
        m.config_hash = j.value("config_hash", "");
        if (j.contains("inputs"))
            m.inputs = j["inputs"].get<std::map<std::string, std::string>>();
        if (j.contains("outputs"))
            m.outputs = j["outputs"].get<std::map<std::string, std::string>>();
        return m;
    } catch (...) {
        return std::nullopt;
    }
}

bool stage_up_to_date(const std::string& manifest_path, const std::string& config_hash,
                      const std::vector<std::string>& inputs) {
    auto m = read_manifest(manifest_path);
    if (!m || m->config_hash != config_hash) return false;
    if (m->inputs.size() != inputs.size()) return false;
    for (const std::string& path : inputs) {
        auto it = m->inputs.find(path);
        if (it == m->inputs.end()) return false;
        if (!std::filesystem::exists(path) || hash_file(path) != it->second) return false;
    }
    for (const auto& [path, hash] : m->outputs) {
        if (!std::filesystem::exists(path) || hash_file(path) != hash) return false;
    }
    return true;
}

}  // namespace ctikg::config
