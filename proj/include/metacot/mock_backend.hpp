#pragma once
// Deterministic stand-in for a language model.
//
// Policies:
//   scripted       item id -> completion text (unscripted items fail permanently)
//   always_best    answers with the reference letter
//   uniform_random letter drawn from a stream seeded by (seed, prompt)
//   fixed_letter   always answers the same letter
//
// Answers are phrased with the anchor the condition's examples use, followed
// by the option text read back from the prompt's final four lines.

#include <atomic>
#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "metacot/backend.hpp"

namespace metacot {

class MockBackend : public Backend {
public:
    enum class Policy { scripted, always_best, uniform_random, fixed_letter };

    static MockBackend scripted(std::map<std::string, std::string, std::less<>> script);
    static MockBackend always_best();
    static MockBackend uniform_random(std::uint64_t seed);
    static MockBackend fixed_letter(char letter);

    MockBackend(const MockBackend& other);

    // Items that raise a permanent BackendError instead of answering.
    MockBackend& fail_on(std::set<std::string, std::less<>> item_ids);

    std::string id() const override;
    std::string complete(const CompletionRequest& request) override;

    std::size_t calls() const { return calls_.load(); }
    Policy policy() const { return policy_; }

private:
    explicit MockBackend(Policy policy) : policy_(policy) {}

    Policy policy_;
    std::uint64_t seed_ = 0;
    char letter_ = 'a';
    std::map<std::string, std::string, std::less<>> script_;
    std::set<std::string, std::less<>> failing_;
    std::atomic<std::size_t> calls_{0};
};

MockBackend::Policy parse_mock_policy(std::string_view s);

// "x) text" lines at the end of a prompt, keyed by letter.
std::map<char, std::string> trailing_options(std::string_view prompt);

} // namespace metacot
