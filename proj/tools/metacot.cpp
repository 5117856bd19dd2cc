// metacot: validate / split / run / analyze / report.
//
// Exit codes: 0 success, 1 other error, 2 validation failure, 3 partial run,
// 4 analysis inconsistency.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include <spdlog/spdlog.h>

#include "metacot/error.hpp"
#include "metacot/pipeline.hpp"

namespace {

enum Exit { ok = 0, other = 1, invalid = 2, partial = 3, inconsistent = 4 };

} // namespace

int main(int argc, char** argv) {
    using namespace metacot;
    namespace fs = std::filesystem;

    CLI::App app{"Chain-of-thought prompting harness for metaphor paraphrase selection"};
    app.require_subcommand(1);

    std::string config_path;
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Check corpus, bank and config; render one prompt per condition");
    auto* split = app.add_subcommand("split", "Write the seeded train/dev/test split");
    auto* run = app.add_subcommand("run", "Execute prompts and write run manifests");
    auto* analyze = app.add_subcommand("analyze", "Compute statistics and write the report");
    auto* report = app.add_subcommand("report", "Re-emit a stored report bundle in one format");

    for (auto* sub : {validate, split, run, analyze}) {
        sub->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    }
    std::vector<std::string> only;
    run->add_option("-c,--condition", only, "Restrict to these conditions");

    std::string bundle_path, format = "markdown", out_dir = ".";
    report->add_option("bundle", bundle_path, "report.json")->required()->check(CLI::ExistingFile);
    report->add_option("-f,--format", format, "markdown, csv or json")->capture_default_str();
    report->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_pattern("[%l] %v");

    try {
        if (report->parsed()) {
            std::ifstream in(bundle_path);
            const auto bundle = bundle_from_json(nlohmann::json::parse(in));
            for (const auto& p : emit(bundle, parse_report_format(format), out_dir)) std::cout << p.string() << '\n';
            return ok;
        }

        const auto ws = load_workspace(load_config(config_path));
        if (validate->parsed()) {
            std::cout << validate_workspace(ws) << '\n';
            return ok;
        }
        if (split->parsed()) {
            const auto path = ws.config.output_dir / "split.json";
            fs::create_directories(path.parent_path());
            std::ofstream(path) << split_to_json(ws.split).dump(2) << '\n';
            std::cout << "train " << ws.split.train.size() << ", dev " << ws.split.dev.size() << ", test "
                      << ws.split.test.size() << " -> " << path.string() << '\n';
            return ok;
        }
        if (run->parsed()) {
            std::optional<std::vector<Condition>> filter;
            if (!only.empty()) {
                filter.emplace();
                for (const auto& c : only) filter->push_back(parse_condition(c));
            }
            const auto summary = run_pipeline(ws, filter);
            std::cout << summary.manifests.size() << " runs, " << summary.items << " items, "
                      << summary.backend_calls << " backend calls, " << summary.cache_hits << " cache hits\n";
            if (!summary.complete()) {
                std::cerr << summary.failures.size() << " failed items:\n";
                for (const auto& [run_id, f] : summary.failures) {
                    std::cerr << "  " << run_id << ' ' << f.item_id << " [" << to_string(f.kind) << ", "
                              << f.attempts << " attempts] " << f.message << '\n';
                }
                return partial;
            }
            return ok;
        }
        if (analyze->parsed()) {
            const auto bundle = metacot::analyze(ws);
            for (const auto& n : bundle.notices) std::cerr << "note: " << n << '\n';
            std::cout << "report for " << bundle.run_ids.size() << " runs -> " << report_dir(ws.config).string()
                      << '\n';
            return ok;
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return invalid;
    } catch (const InconsistencyError& e) {
        std::cerr << "inconsistent runs: " << e.what() << '\n';
        return inconsistent;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return other;
    }
    return other;
}
