#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vinfer {

enum class Role { sc_gen, rc_gen, sx, rx, evaluator, judge };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

struct SamplingParams {
    double temperature = 0.7;
    double top_p = 0.8;
    int max_output_tokens = 1024;
    std::optional<int> top_k;
    std::optional<double> repetition_penalty;

    nlohmann::json to_json() const;
};

enum class BackendKind { http_chat, mock };

std::string to_string(BackendKind k);
BackendKind backend_kind_from_string(const std::string& s);

struct BackendConfig {
    std::string backend_id;
    BackendKind kind = BackendKind::mock;
    std::string endpoint;
    std::string model_name;
    bool supports_images = true;
    SamplingParams sampling;
    double timeout_s = 60.0;
    int max_retries = 3;
    double retry_backoff_base_s = 0.5;
    int max_in_flight = 4;
    // Name of the env var holding the bearer token; empty means no auth.
    std::string auth_env;
    // Mock backends answer from this fixture file.
    std::string fixtures_path;

    void validate() const;
};

struct ModelRequest {
    Role role = Role::rx;
    std::string prompt;
    // Filesystem path of the image to attach; empty means text-only.
    std::string image;
    std::optional<SamplingParams> params_override;
};

struct ModelResponse {
    std::string text;
    int token_count = 0;  // whitespace-split words, the reported accounting
    std::optional<long long> native_token_count;
    double latency_s = 0.0;
    bool cached = false;
    std::string backend_id;
    std::vector<std::string> attempt_log;
};

struct CacheStats {
    long long hits = 0;
    long long misses = 0;
};

// Stable key over everything that shapes a model answer: backend identity,
// role, prompt bytes, image content, effective sampling parameters.
std::string cache_key(const BackendConfig& config, const ModelRequest& request);

// Test hook: first crack at answering a mock request; nullopt falls through
// to the fixture file.
using MockResponder = std::function<std::optional<std::string>(const ModelRequest&)>;

struct GatewayOptions {
    // Empty disables the on-disk response cache.
    std::filesystem::path cache_dir;
};

class Gateway {
  public:
    explicit Gateway(GatewayOptions options = {});
    ~Gateway();

    void register_backend(BackendConfig config);
    bool has_backend(const std::string& backend_id) const;
    const BackendConfig& backend(const std::string& backend_id) const;

    ModelResponse invoke(const std::string& backend_id, const ModelRequest& request);

    void set_mock_responder(MockResponder responder);

    CacheStats cache_stats() const;

  private:
    struct BackendState;

    ModelResponse invoke_http(const BackendConfig& config, const ModelRequest& request,
                              const SamplingParams& sampling);
    ModelResponse invoke_mock(const BackendConfig& config, const nlohmann::json& fixtures,
                              const ModelRequest& request);

    GatewayOptions options_;
    MockResponder mock_responder_;
    mutable std::mutex mutex_;
    std::map<std::string, std::unique_ptr<BackendState>> backends_;
    CacheStats stats_;
};

// Builds the chat-completion request body for one model call.
nlohmann::json build_wire_request(const BackendConfig& config, const ModelRequest& request,
                                  const SamplingParams& sampling);

// Extracts the text (and native token count when present) from a chat
// response body; accepts the flat {"text": ...} shape as a fallback.
std::pair<std::string, std::optional<long long>> parse_wire_response(const std::string& body);

}  // namespace vinfer
