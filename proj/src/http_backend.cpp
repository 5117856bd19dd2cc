#include "metacot/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>

namespace metacot {

using nlohmann::json;

HttpBackendConfig::Api parse_http_api(std::string_view s) {
    if (s == "completions") return HttpBackendConfig::Api::completions;
    if (s == "chat") return HttpBackendConfig::Api::chat;
    throw ValidationError("unknown api '" + std::string(s) + "' (expected completions or chat)");
}

json build_request_body(HttpBackendConfig::Api api, const std::string& prompt, const RequestParams& params) {
    json body = json::object();
    for (const auto& [k, v] : params.extra.items()) body[k] = v;
    body["model"] = params.model;
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    if (!params.stop.empty()) body["stop"] = params.stop;
    if (api == HttpBackendConfig::Api::chat) {
        body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    } else {
        body["prompt"] = prompt;
    }
    return body;
}

std::string parse_response_body(HttpBackendConfig::Api api, const std::string& body) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error&) {
        throw BackendError(FailureKind::malformed, "response is not JSON", 200);
    }
    if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
        throw BackendError(FailureKind::malformed, "response has no choices", 200);
    }
    const auto& choice = doc["choices"][0];
    if (api == HttpBackendConfig::Api::chat) {
        if (choice.contains("message") && choice["message"].is_object() &&
            choice["message"].contains("content") && choice["message"]["content"].is_string()) {
            return choice["message"]["content"].get<std::string>();
        }
    } else if (choice.contains("text") && choice["text"].is_string()) {
        return choice["text"].get<std::string>();
    }
    throw BackendError(FailureKind::malformed, "response choice has no completion text", 200);
}

FailureKind classify_status(int status) {
    if (status == 401 || status == 403) return FailureKind::auth;
    if (status == 429 || status >= 500) return FailureKind::transient;
    return FailureKind::permanent;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    const auto& url = config_.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("base_url needs a scheme: '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
}

std::string HttpBackend::id() const {
    return std::string("http:") + origin_ + path_ +
           (config_.api == HttpBackendConfig::Api::chat ? ":chat" : ":completions");
}

std::string HttpBackend::complete(const CompletionRequest& request) {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const auto endpoint = path_ + (config_.api == HttpBackendConfig::Api::chat ? "/chat/completions" : "/completions");
    const auto body = build_request_body(config_.api, request.prompt, request.params).dump();

    auto res = client.Post(endpoint, headers, body, "application/json");
    if (!res) {
        throw BackendError(FailureKind::transient, "connection failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        const auto kind = classify_status(res->status);
        throw BackendError(kind, "HTTP " + std::to_string(res->status) + " from " + endpoint, res->status);
    }
    return parse_response_body(config_.api, res->body);
}

} // namespace metacot
