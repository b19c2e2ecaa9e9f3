#include "vinfer/runconfig.hpp"

#include <algorithm>
#include <cstddef>
#include <set>
#include <sstream>

#include "vinfer/common.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

namespace {

std::string strip_comment(const std::string& line) {
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_quotes = !in_quotes;
        if (c == '#' && !in_quotes) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& value, const std::string& where) {
    if (value.size() < 2 || value.back() != '"') {
        throw UsageError(where + ": unterminated string");
    }
    std::string out;
    for (size_t i = 1; i + 1 < value.size(); ++i) {
        char c = value[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (i + 2 >= value.size()) throw UsageError(where + ": dangling escape");
        char e = value[++i];
        switch (e) {
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            default: throw UsageError(where + ": unsupported escape \\" + std::string(1, e));
        }
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& where) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw UsageError(where + ": expected true or false, got \"" + value + "\"");
}

double parse_double(const std::string& value, const std::string& where) {
    size_t used = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(value, &used);
    } catch (const std::exception&) {
        throw UsageError(where + ": expected a number, got \"" + value + "\"");
    }
    if (used != value.size()) {
        throw UsageError(where + ": expected a number, got \"" + value + "\"");
    }
    return parsed;
}

long long parse_int(const std::string& value, const std::string& where) {
    size_t used = 0;
    long long parsed = 0;
    try {
        parsed = std::stoll(value, &used);
    } catch (const std::exception&) {
        throw UsageError(where + ": expected an integer, got \"" + value + "\"");
    }
    if (used != value.size()) {
        throw UsageError(where + ": expected an integer, got \"" + value + "\"");
    }
    return parsed;
}

std::vector<std::string> split_csv(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

class KeyReader {
  public:
    KeyReader(const std::map<std::string, std::string>& values, std::string scope)
        : values_(values), scope_(std::move(scope)) {}

    bool has(const std::string& key) {
        seen_.insert(key);
        return values_.count(key) != 0;
    }

    std::string str(const std::string& key, const std::string& fallback = "") {
        seen_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    bool boolean(const std::string& key, bool fallback) {
        seen_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_bool(it->second, scope_ + "." + key);
    }

    double number(const std::string& key, double fallback) {
        seen_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_double(it->second, scope_ + "." + key);
    }

    long long integer(const std::string& key, long long fallback) {
        seen_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_int(it->second, scope_ + "." + key);
    }

    void reject_unknown() const {
        for (const auto& [key, value] : values_) {
            (void)value;
            if (!seen_.count(key)) {
                throw UsageError(scope_ + ": unknown key \"" + key + "\"");
            }
        }
    }

  private:
    const std::map<std::string, std::string>& values_;
    std::string scope_;
    std::set<std::string> seen_;
};

nlohmann::json backend_fingerprint(const BackendConfig& b) {
    nlohmann::json j;
    j["kind"] = to_string(b.kind);
    j["endpoint"] = b.endpoint;
    j["model"] = b.model_name;
    j["supports_images"] = b.supports_images;
    j["sampling"] = b.sampling.to_json();
    j["timeout_s"] = b.timeout_s;
    j["max_retries"] = b.max_retries;
    j["retry_backoff_base_s"] = b.retry_backoff_base_s;
    j["max_in_flight"] = b.max_in_flight;
    j["auth_env"] = b.auth_env;
    j["fixtures"] = b.fixtures_path;
    return j;
}

std::filesystem::path resolve_path(const std::string& value,
                                   const std::filesystem::path& base_dir) {
    if (value.empty()) return {};
    std::filesystem::path p(value);
    return p.is_absolute() ? p : base_dir / p;
}

BackendConfig backend_from_section(const ConfigSection& section, Role role,
                                   const std::filesystem::path& base_dir) {
    KeyReader reader(section.values, "[" + section.name + "]");
    BackendConfig backend;
    backend.backend_id = reader.str("id", to_string(role));
    backend.kind = backend_kind_from_string(reader.str("kind", "mock"));
    backend.endpoint = reader.str("endpoint");
    backend.model_name = reader.str("model", backend.backend_id);
    backend.supports_images = reader.boolean("supports_images", true);
    backend.sampling.temperature = reader.number("temperature", backend.sampling.temperature);
    backend.sampling.top_p = reader.number("top_p", backend.sampling.top_p);
    backend.sampling.max_output_tokens = static_cast<int>(
        reader.integer("max_output_tokens", backend.sampling.max_output_tokens));
    if (reader.has("top_k")) {
        backend.sampling.top_k = static_cast<int>(reader.integer("top_k", 0));
    }
    if (reader.has("repetition_penalty")) {
        backend.sampling.repetition_penalty = reader.number("repetition_penalty", 0.0);
    }
    backend.timeout_s = reader.number("timeout_s", backend.timeout_s);
    backend.max_retries = static_cast<int>(reader.integer("max_retries", backend.max_retries));
    backend.retry_backoff_base_s =
        reader.number("retry_backoff_base_s", backend.retry_backoff_base_s);
    backend.max_in_flight =
        static_cast<int>(reader.integer("max_in_flight", backend.max_in_flight));
    backend.auth_env = reader.str("auth_env");
    backend.fixtures_path = resolve_path(reader.str("fixtures"), base_dir).string();
    reader.reject_unknown();
    backend.validate();
    return backend;
}

}  // namespace

ConfigFile parse_config_text(const std::string& text, const std::string& origin) {
    ConfigFile config;
    ConfigSection* current = nullptr;
    std::stringstream stream(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        std::string where = origin + " line " + std::to_string(line_no);
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw UsageError(where + ": unterminated section header");
            std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) throw UsageError(where + ": empty section name");
            config.sections.push_back({name, {}});
            current = &config.sections.back();
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(where + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError(where + ": empty key");
        if (!value.empty() && value.front() == '"') value = unquote(value, where);
        auto& target = current ? current->values : config.top;
        if (!target.emplace(key, value).second) {
            throw UsageError(where + ": duplicate key \"" + key + "\"");
        }
    }
    return config;
}

ConfigFile parse_config_file(const std::filesystem::path& path) {
    return parse_config_text(read_file(path), path.string());
}

RunSpec run_spec_from_config(const ConfigFile& config, const std::filesystem::path& base_dir) {
    KeyReader reader(config.top, "config");
    RunSpec spec;
    spec.corpus_root = resolve_path(reader.str("corpus"), base_dir);
    spec.templates_dir = resolve_path(reader.str("templates"), base_dir);
    spec.demos_path = resolve_path(reader.str("demos"), base_dir);
    spec.cache_dir = resolve_path(reader.str("cache"), base_dir);
    spec.seed = static_cast<std::uint64_t>(reader.integer("seed", 0));
    if (reader.has("mode")) spec.run.mode = mode_from_string(reader.str("mode"));
    spec.run.shots = static_cast<int>(reader.integer("shots", spec.run.shots));
    spec.run.gate_enabled = reader.boolean("gate", spec.run.gate_enabled);
    spec.run.repetitions = static_cast<int>(reader.integer("repetitions", spec.run.repetitions));
    spec.run.tol = reader.number("tol", spec.run.tol);
    if (reader.has("settings")) {
        for (const std::string& name : split_csv(reader.str("settings"))) {
            spec.run.settings.push_back(setting_from_string(name));
        }
    }
    reader.reject_unknown();

    std::map<std::string, nlohmann::json> fingerprints;
    for (const ConfigSection& section : config.sections) {
        const std::string prefix = "backend.";
        if (section.name.rfind(prefix, 0) != 0) {
            throw UsageError("config: unknown section [" + section.name + "]");
        }
        Role role;
        try {
            role = role_from_string(section.name.substr(prefix.size()));
        } catch (const DataError&) {
            throw UsageError("config: unknown section [" + section.name + "]");
        }
        BackendConfig backend = backend_from_section(section, role, base_dir);
        nlohmann::json fingerprint = backend_fingerprint(backend);
        auto fp = fingerprints.find(backend.backend_id);
        if (fp == fingerprints.end()) {
            fingerprints.emplace(backend.backend_id, fingerprint);
            spec.backends.push_back(backend);
        } else if (fp->second != fingerprint) {
            throw UsageError("config: backend id \"" + backend.backend_id +
                             "\" defined twice with different settings");
        }
        auto [it, inserted] = spec.run.backend_ids.emplace(role, backend.backend_id);
        (void)it;
        if (!inserted) {
            throw UsageError("config: role " + to_string(role) + " configured twice");
        }
    }
    return spec;
}

RunSpec run_spec_from_file(const std::filesystem::path& path) {
    return run_spec_from_config(parse_config_file(path), path.parent_path());
}

}  // namespace vinfer
