#include "vinfer/gateway.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <thread>

#include <httplib.h>

#include "vinfer/common.hpp"
#include "vinfer/hashing.hpp"
#include "vinfer/jsonl.hpp"
#include "vinfer/textutil.hpp"

namespace vinfer {

namespace {

std::string iso_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

bool retryable_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string to_string(Role r) {
    switch (r) {
        case Role::sc_gen: return "sc_gen";
        case Role::rc_gen: return "rc_gen";
        case Role::sx: return "sx";
        case Role::rx: return "rx";
        case Role::evaluator: return "evaluator";
        case Role::judge: return "judge";
    }
    throw DataError("unknown role enum value");
}

Role role_from_string(const std::string& s) {
    for (Role r : {Role::sc_gen, Role::rc_gen, Role::sx, Role::rx, Role::evaluator, Role::judge}) {
        if (to_string(r) == s) return r;
    }
    throw DataError("unknown role: " + s);
}

nlohmann::json SamplingParams::to_json() const {
    nlohmann::json j;
    j["temperature"] = temperature;
    j["top_p"] = top_p;
    j["max_output_tokens"] = max_output_tokens;
    if (top_k.has_value()) j["top_k"] = *top_k;
    if (repetition_penalty.has_value()) j["repetition_penalty"] = *repetition_penalty;
    return j;
}

std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::http_chat: return "http_chat";
        case BackendKind::mock: return "mock";
    }
    throw DataError("unknown backend kind enum value");
}

BackendKind backend_kind_from_string(const std::string& s) {
    if (s == "http_chat") return BackendKind::http_chat;
    if (s == "mock") return BackendKind::mock;
    throw DataError("unknown backend kind: " + s);
}

void BackendConfig::validate() const {
    if (backend_id.empty()) throw UsageError("backend_id must be set");
    if (sampling.temperature < 0.0) {
        throw UsageError("backend " + backend_id + ": temperature must be >= 0");
    }
    if (max_retries < 0) throw UsageError("backend " + backend_id + ": max_retries must be >= 0");
    if (max_in_flight < 1) {
        throw UsageError("backend " + backend_id + ": max_in_flight must be >= 1");
    }
    if (kind == BackendKind::http_chat && endpoint.empty()) {
        throw UsageError("backend " + backend_id + ": http_chat requires an endpoint");
    }
}

std::string cache_key(const BackendConfig& config, const ModelRequest& request) {
    const SamplingParams& sampling =
        request.params_override.has_value() ? *request.params_override : config.sampling;
    nlohmann::json j;
    j["backend_id"] = config.backend_id;
    j["model_name"] = config.model_name;
    j["role"] = to_string(request.role);
    j["prompt"] = request.prompt;
    j["image_sha256"] = request.image.empty() ? "" : sha256_file_hex(request.image);
    j["sampling"] = sampling.to_json();
    return sha256_hex(canonical_json(j));
}

struct Gateway::BackendState {
    BackendConfig config;
    nlohmann::json fixtures;
    std::mutex slot_mutex;
    std::condition_variable slot_cv;
    int in_flight = 0;

    void acquire_slot() {
        std::unique_lock<std::mutex> lock(slot_mutex);
        slot_cv.wait(lock, [this] { return in_flight < config.max_in_flight; });
        ++in_flight;
    }

    void release_slot() {
        {
            std::lock_guard<std::mutex> lock(slot_mutex);
            --in_flight;
        }
        slot_cv.notify_one();
    }
};

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {
    if (!options_.cache_dir.empty()) {
        std::filesystem::create_directories(options_.cache_dir);
    }
}

Gateway::~Gateway() = default;

void Gateway::register_backend(BackendConfig config) {
    config.validate();
    auto state = std::make_unique<BackendState>();
    if (config.kind == BackendKind::mock && !config.fixtures_path.empty()) {
        try {
            state->fixtures = nlohmann::json::parse(read_file(config.fixtures_path));
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("backend " + config.backend_id + ": invalid fixture file " +
                            config.fixtures_path + ": " + e.what());
        }
    }
    state->config = std::move(config);
    std::lock_guard<std::mutex> lock(mutex_);
    backends_[state->config.backend_id] = std::move(state);
}

bool Gateway::has_backend(const std::string& backend_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return backends_.count(backend_id) > 0;
}

const BackendConfig& Gateway::backend(const std::string& backend_id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = backends_.find(backend_id);
    if (it == backends_.end()) throw UsageError("unknown backend: " + backend_id);
    return it->second->config;
}

void Gateway::set_mock_responder(MockResponder responder) {
    std::lock_guard<std::mutex> lock(mutex_);
    mock_responder_ = std::move(responder);
}

CacheStats Gateway::cache_stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

ModelResponse Gateway::invoke(const std::string& backend_id, const ModelRequest& request) {
    BackendState* state = nullptr;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = backends_.find(backend_id);
        if (it == backends_.end()) throw UsageError("unknown backend: " + backend_id);
        state = it->second.get();
    }
    const BackendConfig& config = state->config;
    if (!request.image.empty() && !config.supports_images) {
        throw UsageError("backend " + backend_id + " does not support images but the " +
                         to_string(request.role) + " request carries one");
    }

    std::string key;
    if (!options_.cache_dir.empty()) {
        key = cache_key(config, request);
        auto entry_path = options_.cache_dir / key;
        if (std::filesystem::exists(entry_path)) {
            nlohmann::json entry;
            try {
                entry = nlohmann::json::parse(read_file(entry_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw DataError("corrupt cache entry " + entry_path.string() + ": " + e.what());
            }
            ModelResponse response;
            response.text = entry.at("text").get<std::string>();
            response.token_count = whitespace_token_count(response.text);
            response.latency_s = 0.0;
            response.cached = true;
            response.backend_id = backend_id;
            std::lock_guard<std::mutex> lock(mutex_);
            ++stats_.hits;
            return response;
        }
    }

    const SamplingParams& sampling =
        request.params_override.has_value() ? *request.params_override : config.sampling;

    state->acquire_slot();
    ModelResponse response;
    try {
        response = config.kind == BackendKind::mock
                       ? invoke_mock(config, state->fixtures, request)
                       : invoke_http(config, request, sampling);
    } catch (...) {
        state->release_slot();
        throw;
    }
    state->release_slot();

    response.token_count = whitespace_token_count(response.text);
    response.backend_id = backend_id;

    if (!options_.cache_dir.empty()) {
        nlohmann::json entry;
        entry["backend_id"] = backend_id;
        entry["created_at"] = iso_utc_now();
        entry["text"] = response.text;
        entry["token_count"] = response.token_count;
        write_file_atomic(options_.cache_dir / key, canonical_json(entry) + "\n");
        std::lock_guard<std::mutex> lock(mutex_);
        ++stats_.misses;
    }
    return response;
}

ModelResponse Gateway::invoke_mock(const BackendConfig& config, const nlohmann::json& fixtures,
                                   const ModelRequest& request) {
    MockResponder responder;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        responder = mock_responder_;
    }
    ModelResponse response;
    response.latency_s = 0.0;
    response.attempt_log.push_back("mock");

    if (responder) {
        if (auto answer = responder(request)) {
            response.text = *answer;
            return response;
        }
    }

    std::string exact_key = to_string(request.role) + ":" + sha256_hex(request.prompt);
    if (fixtures.contains("exact") && fixtures["exact"].contains(exact_key)) {
        response.text = fixtures["exact"][exact_key].get<std::string>();
        return response;
    }
    if (fixtures.contains("rules")) {
        for (const auto& rule : fixtures["rules"]) {
            if (rule.contains("role") && rule["role"].get<std::string>() != to_string(request.role)) {
                continue;
            }
            if (rule.contains("contains") &&
                request.prompt.find(rule["contains"].get<std::string>()) == std::string::npos) {
                continue;
            }
            if (rule.contains("image_contains") &&
                request.image.find(rule["image_contains"].get<std::string>()) ==
                    std::string::npos) {
                continue;
            }
            response.text = rule.at("response").get<std::string>();
            return response;
        }
    }
    throw BackendError("mock backend " + config.backend_id + ": no fixture for key \"" +
                       exact_key + "\"");
}

nlohmann::json build_wire_request(const BackendConfig& config, const ModelRequest& request,
                                  const SamplingParams& sampling) {
    nlohmann::json content = nlohmann::json::array();
    if (!request.prompt.empty()) {
        content.push_back({{"type", "text"}, {"text", request.prompt}});
    }
    if (!request.image.empty()) {
        content.push_back({{"type", "image"}, {"data", base64_encode(read_file(request.image))}});
    }
    nlohmann::json body;
    body["model"] = config.model_name;
    body["messages"] = nlohmann::json::array({
        nlohmann::json{{"role", "user"}, {"content", content}},
    });
    body["temperature"] = sampling.temperature;
    body["top_p"] = sampling.top_p;
    body["max_tokens"] = sampling.max_output_tokens;
    if (sampling.top_k.has_value()) body["top_k"] = *sampling.top_k;
    if (sampling.repetition_penalty.has_value()) {
        body["repetition_penalty"] = *sampling.repetition_penalty;
    }
    return body;
}

std::pair<std::string, std::optional<long long>> parse_wire_response(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw BackendError(std::string("unparseable response body: ") + e.what());
    }
    std::optional<long long> native;
    if (j.contains("usage") && j["usage"].is_object() &&
        j["usage"].contains("completion_tokens") && j["usage"]["completion_tokens"].is_number()) {
        native = j["usage"]["completion_tokens"].get<long long>();
    }
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
        const auto& first = j["choices"][0];
        if (first.contains("message") && first["message"].contains("content") &&
            first["message"]["content"].is_string()) {
            return {first["message"]["content"].get<std::string>(), native};
        }
    }
    if (j.contains("text") && j["text"].is_string()) {
        return {j["text"].get<std::string>(), native};
    }
    throw BackendError("response body has neither choices[0].message.content nor text");
}

ModelResponse Gateway::invoke_http(const BackendConfig& config, const ModelRequest& request,
                                   const SamplingParams& sampling) {
    // Split "scheme://host:port/path" into the client base and request path.
    auto scheme_end = config.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw UsageError("backend " + config.backend_id + ": endpoint must include a scheme");
    }
    auto path_start = config.endpoint.find('/', scheme_end + 3);
    std::string base = config.endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : config.endpoint.substr(path_start);

    httplib::Client client(base);
    auto timeout = std::chrono::milliseconds(static_cast<long long>(config.timeout_s * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!config.auth_env.empty()) {
        if (const char* token = std::getenv(config.auth_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    std::string body = build_wire_request(config, request, sampling).dump();

    ModelResponse response;
    auto started = std::chrono::steady_clock::now();
    int attempts_allowed = config.max_retries + 1;
    for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
        if (attempt > 0) {
            double backoff = config.retry_backoff_base_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        }
        auto result = client.Post(path, headers, body, "application/json");
        if (!result) {
            response.attempt_log.push_back("transport: " + httplib::to_string(result.error()));
            continue;
        }
        if (result->status == 200) {
            response.attempt_log.push_back("HTTP 200");
            auto [text, native] = parse_wire_response(result->body);
            response.text = std::move(text);
            response.native_token_count = native;
            response.latency_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            return response;
        }
        response.attempt_log.push_back("HTTP " + std::to_string(result->status));
        if (!retryable_status(result->status)) {
            throw BackendError("backend " + config.backend_id + ": HTTP " +
                               std::to_string(result->status) + " (attempts: " +
                               std::to_string(response.attempt_log.size()) + ")");
        }
    }
    std::string log_joined;
    for (const auto& entry : response.attempt_log) {
        if (!log_joined.empty()) log_joined += "; ";
        log_joined += entry;
    }
    throw BackendError("backend " + config.backend_id + ": retries exhausted after " +
                       std::to_string(response.attempt_log.size()) + " attempts [" + log_joined +
                       "]");
}

}  // namespace vinfer
