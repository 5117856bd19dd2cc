#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metacot/error.hpp"
#include "metacot/prompts.hpp"

namespace metacot {

// Sampling parameters sent with every request. The default temperature of 0.2
// follows the original evaluation; the rest are operational defaults.
struct RequestParams {
    std::string model;
    double temperature = 0.2;
    int max_tokens = 256;
    std::vector<std::string> stop;
    nlohmann::json extra = nlohmann::json::object(); // passthrough fields

    // Throws ValidationError on non-finite/negative temperature or max_tokens < 1.
    void validate() const;
    // Sorted-key JSON with integral floats folded to integers, so that
    // semantically equal parameter sets serialize identically.
    nlohmann::json canonical() const;
};

struct CompletionRequest {
    std::string prompt;
    RequestParams params;
    std::string item_id;
    Condition condition = Condition::no_rationale;
    // Best option letter of the target. Only the mock backend reads it; it is
    // not part of the wire request or the cache key.
    std::optional<char> reference_letter;
};

enum class FailureKind {
    transient,  // 429, 5xx, connection errors: retried
    permanent,  // other 4xx
    auth,       // 401/403
    malformed,  // unparseable response body
};

std::string_view to_string(FailureKind k);

class BackendError : public Error {
public:
    BackendError(FailureKind kind, std::string message, int status = 0, int attempts = 1)
        : Error(std::move(message)), kind_(kind), status_(status), attempts_(attempts) {}

    FailureKind kind() const { return kind_; }
    int status() const { return status_; }
    int attempts() const { return attempts_; }
    bool retryable() const { return kind_ == FailureKind::transient; }

private:
    FailureKind kind_;
    int status_;
    int attempts_;
};

// A completion-style model. Implementations must be safe to call from several
// threads at once.
class Backend {
public:
    virtual ~Backend() = default;
    // Stable identity folded into cache keys.
    virtual std::string id() const = 0;
    // Returns the completion text or throws BackendError.
    virtual std::string complete(const CompletionRequest& request) = 0;
};

} // namespace metacot
