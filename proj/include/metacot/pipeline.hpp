#pragma once
// End-to-end stages driven by a Config: load/validate, run, analyze.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "metacot/config.hpp"
#include "metacot/corpus.hpp"
#include "metacot/llm_client.hpp"
#include "metacot/manifest.hpp"
#include "metacot/prompts.hpp"
#include "metacot/report.hpp"

namespace metacot {

struct Workspace {
    Config config;
    Corpus corpus; // after norms, exclusions and the comprehensibility filter
    SplitCorpus split;
    RationaleBank bank;
    std::map<std::string, double> familiarity;
};

// Loads corpus, norms, exclusions and rationale bank, filters and splits.
// Throws ValidationError on any violation.
Workspace load_workspace(const Config& config);

// Full invariant check plus one rendered prompt per configured condition.
// Returns the one-line summary ("OK, N items, K conditions renderable").
std::string validate_workspace(const Workspace& ws);

std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

nlohmann::json split_to_json(const SplitCorpus& split);

struct RunSummary {
    std::vector<std::filesystem::path> manifests;
    std::size_t items = 0;
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
    std::vector<std::pair<std::string, ItemFailure>> failures; // (run_id, failure)

    bool complete() const { return failures.empty(); }
};

// Renders, executes, parses and scores every (backend, condition) pair over
// the evaluated split; writes split.json and runs/<run_id>.json under the
// output directory. `only` restricts the conditions.
RunSummary run_pipeline(const Workspace& ws, const std::optional<std::vector<Condition>>& only = std::nullopt);

// Builds the report bundle from runs/ and writes report.md, tables/*.csv and
// report.json under <output_dir>/report.
ReportBundle analyze(const Workspace& ws);

std::filesystem::path runs_dir(const Config& config);
std::filesystem::path report_dir(const Config& config);

} // namespace metacot
