#pragma once
// OpenAI-compatible completions / chat-completions over HTTP(S).

#include <chrono>
#include <string>

#include "metacot/backend.hpp"

namespace metacot {

struct HttpBackendConfig {
    enum class Api { completions, chat };

    std::string base_url = "https://api.openai.com/v1";
    Api api = Api::completions;
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
};

HttpBackendConfig::Api parse_http_api(std::string_view s);

// Body for POST {base_url}/completions or /chat/completions.
nlohmann::json build_request_body(HttpBackendConfig::Api api, const std::string& prompt,
                                  const RequestParams& params);
// Extracts the completion text; throws BackendError(malformed).
std::string parse_response_body(HttpBackendConfig::Api api, const std::string& body);
// Maps an HTTP status onto a failure class (status 200 is not a failure).
FailureKind classify_status(int status);

class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string id() const override;
    std::string complete(const CompletionRequest& request) override;

private:
    HttpBackendConfig config_;
    std::string origin_; // scheme://host[:port]
    std::string path_;   // base path without trailing slash
};

} // namespace metacot
