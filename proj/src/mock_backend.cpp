#include "metacot/mock_backend.hpp"

#include <vector>

#include "metacot/rng.hpp"
#include "text_util.hpp"

namespace metacot {

MockBackend MockBackend::scripted(std::map<std::string, std::string, std::less<>> script) {
    MockBackend m(Policy::scripted);
    m.script_ = std::move(script);
    return m;
}

MockBackend MockBackend::always_best() { return MockBackend(Policy::always_best); }

MockBackend MockBackend::uniform_random(std::uint64_t seed) {
    MockBackend m(Policy::uniform_random);
    m.seed_ = seed;
    return m;
}

MockBackend MockBackend::fixed_letter(char letter) {
    const char l = text::ascii_lower(letter);
    if (l < 'a' || l > 'd') throw ValidationError(std::string("mock letter out of range: ") + letter);
    MockBackend m(Policy::fixed_letter);
    m.letter_ = l;
    return m;
}

MockBackend::MockBackend(const MockBackend& other)
    : policy_(other.policy_), seed_(other.seed_), letter_(other.letter_), script_(other.script_),
      failing_(other.failing_), calls_(other.calls_.load()) {}

MockBackend& MockBackend::fail_on(std::set<std::string, std::less<>> item_ids) {
    failing_ = std::move(item_ids);
    return *this;
}

std::string MockBackend::id() const {
    switch (policy_) {
    case Policy::scripted: return "mock:scripted";
    case Policy::always_best: return "mock:always-best";
    case Policy::uniform_random: return "mock:uniform-random:" + std::to_string(seed_);
    case Policy::fixed_letter: return std::string("mock:fixed-letter:") + letter_;
    }
    return "mock";
}

std::map<char, std::string> trailing_options(std::string_view prompt) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < prompt.size()) {
        auto end = prompt.find('\n', start);
        if (end == std::string_view::npos) end = prompt.size();
        lines.push_back(prompt.substr(start, end - start));
        start = end + 1;
    }
    std::map<char, std::string> out;
    for (auto it = lines.rbegin(); it != lines.rend() && out.size() < 4; ++it) {
        const auto line = *it;
        if (line.size() >= 2 && line[0] >= 'a' && line[0] <= 'd' && line[1] == ')') {
            out[line[0]] = std::string(text::trim(line.substr(2)));
        } else if (!text::trim(line).empty()) {
            break;
        }
    }
    return out;
}

std::string MockBackend::complete(const CompletionRequest& request) {
    calls_.fetch_add(1);
    if (failing_.contains(request.item_id)) {
        throw BackendError(FailureKind::permanent, "mock: scripted failure for item " + request.item_id, 400);
    }
    if (policy_ == Policy::scripted) {
        auto it = script_.find(request.item_id);
        if (it == script_.end()) {
            throw BackendError(FailureKind::permanent, "mock: no script entry for item " + request.item_id, 404);
        }
        return it->second;
    }

    char letter = letter_;
    if (policy_ == Policy::always_best) {
        if (!request.reference_letter) {
            throw BackendError(FailureKind::permanent, "mock: always-best needs a reference letter", 400);
        }
        letter = *request.reference_letter;
    } else if (policy_ == Policy::uniform_random) {
        rng::Engine eng(rng::derive(seed_, request.prompt));
        letter = kLetters[rng::below(eng, 4)];
    }

    const auto options = trailing_options(request.prompt);
    std::string option;
    if (auto it = options.find(letter); it != options.end()) option = " " + it->second;
    if (answer_anchor(request.condition) == Anchor::speaker_is_saying) {
        return "So the speaker is saying " + std::string(1, letter) + ")" + option;
    }
    return "The answer is " + std::string(1, letter) + ")" + option;
}

MockBackend::Policy parse_mock_policy(std::string_view s) {
    if (s == "scripted") return MockBackend::Policy::scripted;
    if (s == "always-best" || s == "always_best") return MockBackend::Policy::always_best;
    if (s == "uniform-random" || s == "uniform_random") return MockBackend::Policy::uniform_random;
    if (s == "fixed-letter" || s == "fixed_letter") return MockBackend::Policy::fixed_letter;
    throw ValidationError("unknown mock policy '" + std::string(s) + "'");
}

} // namespace metacot
