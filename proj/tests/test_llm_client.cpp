#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <random>
#include <thread>

#include "metacot/digest.hpp"
#include "metacot/http_backend.hpp"
#include "metacot/llm_client.hpp"
#include "metacot/mock_backend.hpp"
#include "support.hpp"

using namespace metacot;
using nlohmann::json;

namespace {

RequestParams params() {
    RequestParams p;
    p.model = "test-model";
    return p;
}

CompletionRequest request(std::string item, std::string prompt = "Choose...\na) x\nb) y\nc) z\nd) w\n",
                          std::optional<char> ref = 'a') {
    return {std::move(prompt), params(), std::move(item), Condition::no_rationale, ref};
}

CompletionClient::Sleeper no_sleep(std::vector<std::chrono::milliseconds>* log = nullptr) {
    return [log](std::chrono::milliseconds d) {
        if (log) log->push_back(d);
    };
}

// Backend that fails with a given kind a number of times, then answers.
class FlakyBackend : public Backend {
public:
    FlakyBackend(FailureKind kind, int failures) : kind_(kind), failures_(failures) {}
    std::string id() const override { return "flaky"; }
    std::string complete(const CompletionRequest&) override {
        if (calls_++ < failures_) throw BackendError(kind_, "scripted failure", 503);
        return "The answer is b)";
    }
    int calls() const { return calls_; }

private:
    FailureKind kind_;
    int failures_;
    std::atomic<int> calls_{0};
};

// Local OpenAI-compatible stub serving a scripted status sequence.
class StubServer {
public:
    explicit StubServer(std::vector<int> statuses, std::string body = R"j({"choices":[{"text":"The answer is a)"}]})j")
        : statuses_(std::move(statuses)), body_(std::move(body)) {
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            const auto i = hits_++;
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            last_path_ = req.path;
            const int status = i < statuses_.size() ? statuses_[i] : 200;
            res.status = status;
            res.set_content(status == 200 ? body_ : R"({"error":"nope"})", "application/json");
        };
        server_.Post("/v1/completions", handler);
        server_.Post("/v1/chat/completions", handler);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    std::size_t hits() const { return hits_; }
    std::string last_body_, last_auth_, last_path_;

private:
    std::vector<int> statuses_;
    std::string body_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> hits_{0};
};

HttpBackend http_backend(const StubServer& s, HttpBackendConfig::Api api = HttpBackendConfig::Api::completions) {
    HttpBackendConfig c;
    c.base_url = s.base_url();
    c.api = api;
    c.api_key_env = "METACOT_TEST_KEY";
    c.timeout = std::chrono::seconds(5);
    return HttpBackend(c);
}

} // namespace

TEST(CacheKey, DeterministicAndCanonical) {
    auto a = params();
    auto b = params();
    EXPECT_EQ(cache_key("m", "x", "prompt", a), cache_key("m", "x", "prompt", b));
    b.temperature = json::parse("0.20").get<double>();
    EXPECT_EQ(cache_key("m", "x", "prompt", a), cache_key("m", "x", "prompt", b));
    a.temperature = 1;
    b.temperature = 1.0;
    a.extra = json::parse(R"({"top_p":1.0,"n":1})");
    b.extra = json::parse(R"({"n":1,"top_p":1})");
    EXPECT_EQ(cache_key("m", "x", "prompt", a), cache_key("m", "x", "prompt", b));
    EXPECT_NE(cache_key("m", "x", "prompt", a), cache_key("m2", "x", "prompt", a));
    EXPECT_NE(cache_key("m", "x", "prompt", a), cache_key("m", "y", "prompt", a));
    b.max_tokens = 10;
    EXPECT_NE(cache_key("m", "x", "prompt", a), cache_key("m", "x", "prompt", b));
}

TEST(CacheKey, OneByteFlipChangesDigest) {
    std::mt19937_64 eng(5);
    const auto p = params();
    for (int i = 0; i < 500; ++i) {
        std::string prompt(1 + eng() % 300, '\0');
        for (auto& c : prompt) c = static_cast<char>(eng() % 256);
        auto flipped = prompt;
        const auto pos = eng() % flipped.size();
        flipped[pos] = static_cast<char>(flipped[pos] ^ static_cast<char>(1 + eng() % 255));
        EXPECT_NE(cache_key("b", "m", prompt, p), cache_key("b", "m", flipped, p));
    }
}

TEST(Digest, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Params, Validation) {
    auto p = params();
    p.temperature = -0.1;
    EXPECT_THROW(p.validate(), ValidationError);
    p.temperature = std::nan("");
    EXPECT_THROW(p.validate(), ValidationError);
    p = params();
    p.max_tokens = 0;
    EXPECT_THROW(p.validate(), ValidationError);
    EXPECT_EQ(RequestParams{}.temperature, 0.2);
}

TEST(Client, ScriptedThenCached) {
    testsupport::TempDir tmp("client");
    CompletionCache cache(tmp.path());
    auto mock = MockBackend::scripted({{"bagpipe", "The answer is a) A bagpipe is loud."}});
    CompletionClient client(mock, &cache, {}, nullptr, no_sleep());
    const auto first = client.complete(request("bagpipe"));
    EXPECT_EQ(first.completion_text, "The answer is a) A bagpipe is loud.");
    EXPECT_FALSE(first.from_cache);
    EXPECT_TRUE(std::filesystem::exists(cache.path_for(first.prompt_digest)));

    const auto second = client.complete(request("bagpipe"));
    EXPECT_EQ(second.completion_text, first.completion_text);
    EXPECT_TRUE(second.from_cache);
    EXPECT_EQ(mock.calls(), 1u);
    EXPECT_EQ(client.cache_hits(), 1u);
}

TEST(Client, CacheNeverOverwrites) {
    testsupport::TempDir tmp("cache");
    CompletionCache cache(tmp.path());
    cache.put({"abc", "b", json::object(), "first", 1, "t", 1, 1});
    cache.put({"abc", "b", json::object(), "second", 1, "t", 1, 1});
    EXPECT_EQ(cache.get("abc")->completion_text, "first");
    EXPECT_FALSE(cache.get("missing"));
}

TEST(Client, RetriesTransientWithBackoff) {
    FlakyBackend backend(FailureKind::transient, 2);
    std::vector<std::chrono::milliseconds> delays;
    CompletionClient client(backend, nullptr, {}, nullptr, no_sleep(&delays));
    const auto rec = client.complete(request("x"));
    EXPECT_EQ(rec.attempts, 3);
    EXPECT_EQ(delays, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000),
                                                               std::chrono::milliseconds(2000)}));
}

TEST(Client, ExhaustedRetriesReportAttempts) {
    FlakyBackend backend(FailureKind::transient, 100);
    RetryPolicy retry;
    retry.max_retries = 3;
    CompletionClient client(backend, nullptr, retry, nullptr, no_sleep());
    try {
        client.complete(request("x"));
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.attempts(), 4);
        EXPECT_TRUE(e.retryable());
    }
    EXPECT_EQ(backend.calls(), 4);
}

TEST(Client, PermanentAndAuthNotRetried) {
    for (auto kind : {FailureKind::permanent, FailureKind::auth, FailureKind::malformed}) {
        FlakyBackend backend(kind, 1);
        CompletionClient client(backend, nullptr, {}, nullptr, no_sleep());
        EXPECT_THROW(client.complete(request("x")), BackendError);
        EXPECT_EQ(backend.calls(), 1);
    }
}

TEST(Client, BackoffCapped) {
    RetryPolicy r;
    EXPECT_EQ(r.delay(1).count(), 1000);
    EXPECT_EQ(r.delay(3).count(), 4000);
    EXPECT_EQ(r.delay(20).count(), 60000);
}

TEST(Client, RateLimiterSpacesRequests) {
    RateLimiter limiter(50, 1);
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 6; ++i) limiter.acquire();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    EXPECT_GE(elapsed, std::chrono::milliseconds(90)); // 5 refills at 20 ms
}

TEST(Http, StatusClassification) {
    EXPECT_EQ(classify_status(429), FailureKind::transient);
    EXPECT_EQ(classify_status(503), FailureKind::transient);
    EXPECT_EQ(classify_status(401), FailureKind::auth);
    EXPECT_EQ(classify_status(403), FailureKind::auth);
    EXPECT_EQ(classify_status(400), FailureKind::permanent);
    EXPECT_EQ(classify_status(404), FailureKind::permanent);
}

TEST(Http, WireShapes) {
    auto p = params();
    p.stop = {"\n\n"};
    const auto c = build_request_body(HttpBackendConfig::Api::completions, "hi", p);
    EXPECT_EQ(c["prompt"], "hi");
    EXPECT_EQ(c["model"], "test-model");
    EXPECT_EQ(c["temperature"], 0.2);
    EXPECT_EQ(c["max_tokens"], 256);
    EXPECT_EQ(c["stop"][0], "\n\n");
    const auto chat = build_request_body(HttpBackendConfig::Api::chat, "hi", p);
    EXPECT_EQ(chat["messages"][0]["role"], "user");
    EXPECT_EQ(chat["messages"][0]["content"], "hi");
    EXPECT_FALSE(chat.contains("prompt"));

    EXPECT_EQ(parse_response_body(HttpBackendConfig::Api::completions, R"({"choices":[{"text":"ok"}]})"), "ok");
    EXPECT_EQ(parse_response_body(HttpBackendConfig::Api::chat,
                                  R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})"),
              "ok");
    for (const char* bad : {"not json", "{}", R"({"choices":[]})", R"({"choices":[{"message":1}]})"}) {
        try {
            parse_response_body(HttpBackendConfig::Api::completions, bad);
            FAIL() << bad;
        } catch (const BackendError& e) {
            EXPECT_EQ(e.kind(), FailureKind::malformed);
        }
    }
}

TEST(Http, RetriesThrough429s) {
    ::setenv("METACOT_TEST_KEY", "sk-test", 1);
    StubServer server({429, 429, 200});
    auto backend = http_backend(server);
    std::vector<std::chrono::milliseconds> delays;
    CompletionClient client(backend, nullptr, {}, nullptr, no_sleep(&delays));
    const auto rec = client.complete(request("bagpipe"));
    EXPECT_EQ(rec.completion_text, "The answer is a)");
    EXPECT_EQ(rec.attempts, 3);
    EXPECT_GT(rec.latency_ms, 0.0);
    EXPECT_EQ(server.hits(), 3u);
    EXPECT_EQ(delays.size(), 2u);
    EXPECT_EQ(server.last_auth_, "Bearer sk-test");
    EXPECT_EQ(server.last_path_, "/v1/completions");
    // The reference letter stays out of the wire request.
    EXPECT_EQ(json::parse(server.last_body_).size(), 4u); // model, prompt, temperature, max_tokens
}

TEST(Http, AuthFailureIsNotRetried) {
    StubServer server({401});
    auto backend = http_backend(server, HttpBackendConfig::Api::chat);
    CompletionClient client(backend, nullptr, {}, nullptr, no_sleep());
    try {
        client.complete(request("x"));
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.kind(), FailureKind::auth);
        EXPECT_EQ(e.attempts(), 1);
    }
    EXPECT_EQ(server.hits(), 1u);
    EXPECT_EQ(server.last_path_, "/v1/chat/completions");
}

TEST(Http, ConnectionFailureIsTransient) {
    HttpBackendConfig c;
    c.base_url = "http://127.0.0.1:1";
    c.timeout = std::chrono::seconds(1);
    HttpBackend backend(c);
    try {
        backend.complete(request("x"));
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_EQ(e.kind(), FailureKind::transient);
    }
    EXPECT_EQ(backend.id(), "http:http://127.0.0.1:1:completions");
}

TEST(Mock, Policies) {
    const std::string prompt = "...\n\"T is U.\"\na) one\nb) two\nc) three\nd) four\n";
    auto best = MockBackend::always_best();
    EXPECT_EQ(best.complete(request("t", prompt, 'c')), "The answer is c) three");
    auto fixed = MockBackend::fixed_letter('D');
    EXPECT_EQ(fixed.complete(request("t", prompt)), "The answer is d) four");
    auto qud = request("t", prompt, 'b');
    qud.condition = Condition::qud;
    EXPECT_EQ(best.complete(qud), "So the speaker is saying b) two");

    auto r1 = MockBackend::uniform_random(3);
    auto r2 = MockBackend::uniform_random(3);
    EXPECT_EQ(r1.complete(request("t", prompt)), r2.complete(request("t", prompt)));
    EXPECT_EQ(r1.id(), "mock:uniform-random:3");
    EXPECT_THROW(MockBackend::fixed_letter('e'), ValidationError);
    EXPECT_THROW(MockBackend::scripted({}).complete(request("t")), BackendError);
}

TEST(Experiment, ParallelismInvariantAndSorted) {
    std::vector<WorkItem> items;
    for (int i = 0; i < 60; ++i) {
        const std::string id = "item" + std::to_string((i * 37) % 60);
        items.push_back({id, "P" + id + "\na) w\nb) x\nc) y\nd) z\n", kLetters[static_cast<std::size_t>(i % 4)]});
    }
    auto run_with = [&](std::size_t parallelism) {
        auto mock = MockBackend::uniform_random(11);
        CompletionClient client(mock, nullptr, {}, nullptr, no_sleep());
        return run_experiment(client, items, Condition::qud, params(), parallelism);
    };
    const auto a = run_with(1);
    const auto b = run_with(8);
    ASSERT_EQ(a.records.size(), 60u);
    ASSERT_EQ(b.records.size(), 60u);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].item_id, b.records[i].item_id);
        EXPECT_EQ(a.records[i].completion_text, b.records[i].completion_text);
        if (i) EXPECT_LT(a.records[i - 1].item_id, a.records[i].item_id);
    }
}

TEST(Experiment, PartialFailureIsItemized) {
    std::vector<WorkItem> items;
    for (int i = 0; i < 150; ++i) items.push_back({"i" + std::to_string(1000 + i), "p\na) w\nb) x\nc) y\nd) z\n", 'a'});
    auto mock = MockBackend::always_best();
    mock.fail_on({"i1042"});
    CompletionClient client(mock, nullptr, {}, nullptr, no_sleep());
    const auto run = run_experiment(client, items, Condition::no_rationale, params(), 4);
    EXPECT_EQ(run.records.size(), 149u);
    ASSERT_EQ(run.failures.size(), 1u);
    EXPECT_EQ(run.failures[0].item_id, "i1042");
    EXPECT_EQ(run.failures[0].kind, FailureKind::permanent);
    EXPECT_FALSE(run.complete());
}
