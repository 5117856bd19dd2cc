#pragma once
// Run manifests: one JSON file per (model, condition, split) run holding the
// configuration snapshot, seeds, template version, corpus digest and every
// record with its parsed answer.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metacot/llm_client.hpp"
#include "metacot/parser.hpp"
#include "metacot/prompts.hpp"
#include "metacot/stats.hpp"

namespace metacot {

struct ManifestRecord {
    std::string item_id;
    std::string prompt_digest;
    std::string completion_text;
    std::optional<char> letter;
    Anchor anchor = Anchor::none;
    std::optional<int> appropriateness;
    bool from_cache = false;
    double latency_ms = 0;
    int attempts = 0;
    std::string timestamp;
};

struct RunManifest {
    std::string run_id;
    std::string model; // backend label
    std::string backend_id;
    Condition condition = Condition::no_rationale;
    std::string split;
    std::string corpus_digest;
    std::string template_version;
    RequestParams params;
    std::map<std::string, std::uint64_t> seeds;
    std::vector<std::string> example_order;
    nlohmann::json config = nlohmann::json::object();
    std::vector<ManifestRecord> records;
    std::vector<ItemFailure> failures;

    bool complete() const { return failures.empty(); }
    // Valid answers as a score vector; invalid responses are counted only.
    ScoreVector scores() const;
};

std::string make_run_id(std::string_view model, Condition condition, std::string_view split);

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& doc);

void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);
// All *.json manifests in a directory, sorted by file name.
std::vector<RunManifest> read_manifests(const std::filesystem::path& dir);

} // namespace metacot
