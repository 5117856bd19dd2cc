#pragma once
// Cached, rate-limited, retrying execution of prompts against a Backend, and
// the per-condition experiment runner built on top of it.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "metacot/backend.hpp"

namespace metacot {

// SHA-256 over the canonical request metadata followed by the raw prompt
// bytes. Depends only on (backend_id, model, prompt, params).
std::string cache_key(std::string_view backend_id, std::string_view model, std::string_view prompt,
                      const RequestParams& params);

struct CachedCompletion {
    std::string digest;
    std::string backend_id;
    nlohmann::json params;
    std::string completion_text;
    std::size_t prompt_bytes = 0;
    std::string created; // ISO-8601 UTC
    double latency_ms = 0;
    int attempts = 1;
};

// Append-only store: one JSON file per digest. Readers never block; writers
// are serialized and publish via rename, and an existing entry is never
// overwritten.
class CompletionCache {
public:
    explicit CompletionCache(std::filesystem::path dir);

    std::optional<CachedCompletion> get(const std::string& digest) const;
    void put(const CachedCompletion& entry);
    std::filesystem::path path_for(const std::string& digest) const;

private:
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

struct RetryPolicy {
    int max_retries = 5;
    std::chrono::milliseconds base_delay{1000};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{60000};

    // Delay before retry number `retry` (1-based).
    std::chrono::milliseconds delay(int retry) const;
};

// Token bucket; a rate of 0 disables limiting.
class RateLimiter {
public:
    RateLimiter(double per_second, double burst);
    void acquire();

private:
    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct CompletionRecord {
    std::string prompt_digest;
    Condition condition = Condition::no_rationale;
    std::string item_id;
    RequestParams params;
    std::string completion_text;
    std::string backend_id;
    double latency_ms = 0;
    bool from_cache = false;
    std::string timestamp;
    int attempts = 0;
};

class CompletionClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    CompletionClient(Backend& backend, CompletionCache* cache, RetryPolicy retry = {},
                     RateLimiter* limiter = nullptr, Sleeper sleeper = {});

    // Consults the cache first; on a miss calls the backend, retrying
    // transient failures with exponential backoff. Throws BackendError with
    // the attempt count once retries are exhausted or on a permanent failure.
    CompletionRecord complete(const CompletionRequest& request);

    const Backend& backend() const { return backend_; }
    std::size_t backend_calls() const { return backend_calls_.load(); }
    std::size_t cache_hits() const { return cache_hits_.load(); }

private:
    Backend& backend_;
    CompletionCache* cache_;
    RetryPolicy retry_;
    RateLimiter* limiter_;
    Sleeper sleeper_;
    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

struct WorkItem {
    std::string item_id;
    std::string prompt;
    std::optional<char> reference_letter;
};

struct ItemFailure {
    std::string item_id;
    FailureKind kind = FailureKind::permanent;
    int attempts = 0;
    std::string message;
};

struct ExperimentRun {
    std::string run_id;
    Condition condition = Condition::no_rationale;
    std::string split;
    std::string backend_id;
    RequestParams params;
    std::vector<CompletionRecord> records; // sorted by item_id
    std::vector<ItemFailure> failures;     // sorted by item_id
    std::map<std::string, std::uint64_t> seeds;

    bool complete() const { return failures.empty(); }
};

// Fans out up to `parallelism` concurrent requests. Per-item failures are
// collected rather than aborting the run.
ExperimentRun run_experiment(CompletionClient& client, const std::vector<WorkItem>& items, Condition condition,
                             const RequestParams& params, std::size_t parallelism);

} // namespace metacot
