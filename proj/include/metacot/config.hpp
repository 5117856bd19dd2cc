#pragma once
// Declarative pipeline configuration (one JSON file per study).
//
// Relative paths resolve against the directory holding the config file. All
// seeds must be given explicitly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metacot/corpus.hpp"
#include "metacot/llm_client.hpp"
#include "metacot/prompts.hpp"

namespace metacot {

inline constexpr std::string_view kDefaultApiKeyEnv = "OPENAI_API_KEY";

struct BackendSpec {
    std::string label; // model name used in report rows
    std::string kind;  // "mock" or "http"
    // mock
    std::string policy = "always-best";
    std::uint64_t seed = 0;
    char letter = 'a';
    std::optional<std::filesystem::path> script; // JSON object item_id -> completion
    // http
    std::string base_url;
    std::string api = "completions";
    std::string api_key_env{kDefaultApiKeyEnv};
    int timeout_s = 120;

    RequestParams params;
};

struct Seeds {
    std::uint64_t split = 0;
    std::uint64_t letters = 0;
    std::uint64_t example_order = 0;
    std::uint64_t bootstrap = 0;
    std::uint64_t chance = 0;
};

struct AnalysisSettings {
    std::size_t bootstrap_reps = 10000;
    std::size_t chance_reps = 10000;
    double level = 0.95;
    std::size_t gap_k = 30;
};

struct Config {
    std::filesystem::path source; // the config file itself, if loaded from disk

    std::filesystem::path corpus;
    CorpusFormat corpus_format = CorpusFormat::jsonl;
    std::optional<std::filesystem::path> exclusions;
    std::optional<std::filesystem::path> norms;
    std::optional<double> comprehensibility_threshold = 5.0;
    Source filter_source = Source::literary;

    std::filesystem::path rationale_bank;
    std::vector<std::string> examples;

    SplitSizes split_sizes{30, 100, 150};
    std::string evaluate_split = "test";
    LetterPolicy::Kind letters = LetterPolicy::Kind::shuffled;

    std::vector<Condition> conditions{kAllConditions.begin(), kAllConditions.end()};
    std::vector<BackendSpec> backends;

    std::size_t parallelism = 4;
    double requests_per_second = 0;
    RetryPolicy retry;

    std::filesystem::path cache_dir;
    std::filesystem::path output_dir;

    Seeds seeds;
    AnalysisSettings analysis;

    // Canonical JSON snapshot, paths as given after resolution.
    nlohmann::json to_json() const;
};

Config parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& path);

} // namespace metacot
