#pragma once
// Result tables and histogram data regenerated from run manifests.
//
// Rows are models (backend labels); columns are the six prompt conditions in
// a fixed order. Cells for conditions without a run are absent, never zero.
// Serialization is deterministic: re-emitting from the same manifests
// produces identical bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metacot/manifest.hpp"
#include "metacot/ordinal.hpp"
#include "metacot/stats.hpp"

namespace metacot {

struct ReportSettings {
    std::size_t bootstrap_reps = kDefaultReps;
    std::size_t chance_reps = kDefaultReps;
    double level = 0.95;
    std::size_t gap_k = kDefaultGapK;
    std::uint64_t bootstrap_seed = 0;
    std::uint64_t chance_seed = 0;

    bool operator==(const ReportSettings&) const = default;
};

struct FamiliarityEffect {
    double beta = 0;
    double se = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::vector<double> thresholds;
    std::vector<int> categories;
    bool converged = false;
    int iterations = 0;

    bool operator==(const FamiliarityEffect&) const = default;
};

struct ConditionResult {
    std::string run_id;
    Condition condition = Condition::no_rationale;
    std::size_t n_valid = 0;
    std::size_t n_invalid = 0;
    std::optional<BootstrapResult> mean;   // absent when no valid responses
    std::optional<std::size_t> chance_hits; // with chance_reps from the settings
    Histogram histogram;
    std::optional<FamiliarityEffect> familiarity;
    std::string familiarity_note;
    std::optional<double> gap;
    std::string gap_note;

    std::optional<double> chance_p(std::size_t reps) const;
    bool operator==(const ConditionResult&) const = default;
};

struct CorrelationCell {
    Condition a = Condition::no_rationale;
    Condition b = Condition::no_rationale;
    std::optional<double> r;
    std::optional<double> p;
    std::size_t n = 0;
    std::string note;

    bool operator==(const CorrelationCell&) const = default;
};

struct ModelReport {
    std::string model;
    std::string backend_id;
    std::map<Condition, ConditionResult> conditions;
    std::vector<CorrelationCell> correlations; // upper triangle, row-major in column order

    bool operator==(const ModelReport&) const = default;
};

struct ReportBundle {
    std::vector<std::string> run_ids;
    std::vector<ModelReport> models;
    std::string corpus_digest;
    std::string template_version;
    std::string split;
    std::map<std::string, std::uint64_t> seeds;
    ReportSettings settings;
    std::vector<std::string> notices;

    bool operator==(const ReportBundle&) const = default;
};

// Throws InconsistencyError for corpus-digest or template mismatches, mixed
// splits, duplicate (model, condition) pairs, or partial runs.
ReportBundle build_report(const std::vector<RunManifest>& manifests,
                          const std::map<std::string, double>& familiarity, const ReportSettings& settings);

// "*" for p < .05, "**" for p < .001.
std::string significance_stars(double p);

nlohmann::json to_json(const ReportBundle& bundle);
ReportBundle bundle_from_json(const nlohmann::json& doc);

std::string render_markdown(const ReportBundle& bundle);
// File name (relative to tables/) -> contents.
std::map<std::string, std::string> render_csv(const ReportBundle& bundle);
std::string render_json(const ReportBundle& bundle);

enum class ReportFormat { markdown, csv, json };
ReportFormat parse_report_format(std::string_view s);

// Writes report.md, tables/*.csv or report.json under `dir`.
std::vector<std::filesystem::path> emit(const ReportBundle& bundle, ReportFormat format,
                                        const std::filesystem::path& dir);

} // namespace metacot
