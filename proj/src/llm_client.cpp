#include "metacot/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "metacot/digest.hpp"

namespace metacot {

using nlohmann::json;

namespace {

// Integral floats become integers so 1 and 1.0 serialize alike.
json normalize_numbers(const json& v) {
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && std::trunc(d) == d && std::fabs(d) < 9.0e15) {
            return json(static_cast<std::int64_t>(d));
        }
        return v;
    }
    if (v.is_object()) {
        json out = json::object();
        for (const auto& [k, x] : v.items()) out[k] = normalize_numbers(x);
        return out;
    }
    if (v.is_array()) {
        json out = json::array();
        for (const auto& x : v) out.push_back(normalize_numbers(x));
        return out;
    }
    return v;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

} // namespace

std::string_view to_string(FailureKind k) {
    switch (k) {
    case FailureKind::transient: return "transient";
    case FailureKind::permanent: return "permanent";
    case FailureKind::auth: return "auth";
    case FailureKind::malformed: return "malformed";
    }
    return "?";
}

void RequestParams::validate() const {
    if (!std::isfinite(temperature) || temperature < 0) {
        throw ValidationError("temperature must be finite and >= 0");
    }
    if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
    if (!extra.is_object()) throw ValidationError("extra params must be an object");
}

json RequestParams::canonical() const {
    json out = json::object();
    out["model"] = model;
    out["temperature"] = temperature;
    out["max_tokens"] = max_tokens;
    out["stop"] = stop;
    out["extra"] = extra;
    return normalize_numbers(out);
}

std::string cache_key(std::string_view backend_id, std::string_view model, std::string_view prompt,
                      const RequestParams& params) {
    json meta = {{"backend", backend_id}, {"model", model}, {"params", params.canonical()}};
    std::string bytes = meta.dump();
    // The dump never contains a raw NUL, so the separator is unambiguous.
    bytes.push_back('\0');
    bytes.append(prompt);
    return sha256_hex(bytes);
}

CompletionCache::CompletionCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path CompletionCache::path_for(const std::string& digest) const {
    return dir_ / (digest + ".json");
}

std::optional<CachedCompletion> CompletionCache::get(const std::string& digest) const {
    std::ifstream in(path_for(digest), std::ios::binary);
    if (!in) return std::nullopt;
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error&) {
        spdlog::warn("ignoring unreadable cache entry {}", digest);
        return std::nullopt;
    }
    CachedCompletion c;
    c.digest = doc.value("digest", "");
    if (c.digest != digest) return std::nullopt;
    c.backend_id = doc.value("backend_id", "");
    c.params = doc.value("params", json::object());
    c.completion_text = doc.value("completion_text", "");
    c.prompt_bytes = doc.value("prompt_bytes", std::size_t{0});
    c.created = doc.value("created", "");
    c.latency_ms = doc.value("latency_ms", 0.0);
    c.attempts = doc.value("attempts", 1);
    return c;
}

void CompletionCache::put(const CachedCompletion& entry) {
    const json doc = {{"digest", entry.digest},           {"backend_id", entry.backend_id},
                      {"params", entry.params},           {"completion_text", entry.completion_text},
                      {"prompt_bytes", entry.prompt_bytes}, {"created", entry.created},
                      {"latency_ms", entry.latency_ms},   {"attempts", entry.attempts}};
    std::lock_guard lock(write_mutex_);
    const auto target = path_for(entry.digest);
    if (std::filesystem::exists(target)) return;
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write cache entry " + tmp.string());
        out << doc.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, target);
}

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
    const double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, retry - 1);
    return std::chrono::milliseconds(
        static_cast<std::int64_t>(std::min(ms, static_cast<double>(max_delay.count()))));
}

RateLimiter::RateLimiter(double per_second, double burst)
    : rate_(per_second), capacity_(std::max(1.0, burst)), tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (rate_ <= 0) return;
    for (;;) {
        std::chrono::duration<double> wait{};
        {
            std::lock_guard lock(mutex_);
            const auto now = std::chrono::steady_clock::now();
            tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        }
        std::this_thread::sleep_for(wait);
    }
}

CompletionClient::CompletionClient(Backend& backend, CompletionCache* cache, RetryPolicy retry,
                                   RateLimiter* limiter, Sleeper sleeper)
    : backend_(backend), cache_(cache), retry_(retry), limiter_(limiter), sleeper_(std::move(sleeper)) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

CompletionRecord CompletionClient::complete(const CompletionRequest& request) {
    request.params.validate();
    CompletionRecord rec;
    rec.backend_id = backend_.id();
    rec.prompt_digest = cache_key(rec.backend_id, request.params.model, request.prompt, request.params);
    rec.condition = request.condition;
    rec.item_id = request.item_id;
    rec.params = request.params;

    if (cache_) {
        if (auto hit = cache_->get(rec.prompt_digest)) {
            cache_hits_.fetch_add(1);
            rec.completion_text = std::move(hit->completion_text);
            rec.from_cache = true;
            rec.latency_ms = hit->latency_ms;
            rec.timestamp = std::move(hit->created);
            rec.attempts = hit->attempts;
            spdlog::debug("cache hit {} item {}", rec.prompt_digest, rec.item_id);
            return rec;
        }
    }

    spdlog::trace("prompt {}:\n{}", rec.prompt_digest, request.prompt);
    const auto started = std::chrono::steady_clock::now();
    for (int attempt = 1;; ++attempt) {
        if (limiter_) limiter_->acquire();
        backend_calls_.fetch_add(1);
        try {
            rec.completion_text = backend_.complete(request);
            rec.attempts = attempt;
            break;
        } catch (const BackendError& e) {
            if (!e.retryable()) {
                throw BackendError(e.kind(), e.what(), e.status(), attempt);
            }
            if (attempt > retry_.max_retries) {
                throw BackendError(e.kind(),
                                   std::string("retries exhausted after ") + std::to_string(attempt) +
                                       " attempts: " + e.what(),
                                   e.status(), attempt);
            }
            const auto d = retry_.delay(attempt);
            spdlog::info("item {} attempt {} failed ({}), retrying in {} ms", rec.item_id, attempt, e.what(),
                         d.count());
            sleeper_(d);
        }
    }
    rec.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    rec.timestamp = utc_now();
    spdlog::debug("completed {} item {} in {:.1f} ms", rec.prompt_digest, rec.item_id, rec.latency_ms);

    if (cache_) {
        cache_->put({rec.prompt_digest, rec.backend_id, request.params.canonical(), rec.completion_text,
                     request.prompt.size(), rec.timestamp, rec.latency_ms, rec.attempts});
    }
    return rec;
}

ExperimentRun run_experiment(CompletionClient& client, const std::vector<WorkItem>& items, Condition condition,
                             const RequestParams& params, std::size_t parallelism) {
    if (parallelism == 0) throw ValidationError("parallelism must be positive");
    params.validate();

    struct Slot {
        std::optional<CompletionRecord> record;
        std::optional<ItemFailure> failure;
    };
    std::vector<Slot> slots(items.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= items.size()) return;
            const auto& w = items[i];
            CompletionRequest req{w.prompt, params, w.item_id, condition, w.reference_letter};
            try {
                slots[i].record = client.complete(req);
            } catch (const BackendError& e) {
                spdlog::warn("item {} failed: {}", w.item_id, e.what());
                slots[i].failure = ItemFailure{w.item_id, e.kind(), e.attempts(), e.what()};
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const auto n = std::min(parallelism, std::max<std::size_t>(items.size(), 1));
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }

    ExperimentRun run;
    run.condition = condition;
    run.backend_id = client.backend().id();
    run.params = params;
    for (auto& s : slots) {
        if (s.record) run.records.push_back(std::move(*s.record));
        if (s.failure) run.failures.push_back(std::move(*s.failure));
    }
    std::sort(run.records.begin(), run.records.end(),
              [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
    std::sort(run.failures.begin(), run.failures.end(),
              [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
    return run;
}

} // namespace metacot
