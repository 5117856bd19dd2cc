#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "metacot/error.hpp"
#include "metacot/pipeline.hpp"
#include "support.hpp"

using namespace metacot;
namespace fs = std::filesystem;

namespace {

Config fast_config(const fs::path& scratch) {
    auto cfg = testsupport::sample_config(scratch);
    cfg.analysis.bootstrap_reps = 500;
    cfg.analysis.chance_reps = 500;
    return cfg;
}

// The shipped config as JSON with data paths made absolute and outputs under `scratch`.
nlohmann::json config_json(const fs::path& scratch) {
    std::ifstream in(testsupport::data_dir() / "config.json");
    auto doc = nlohmann::json::parse(in);
    const auto abs = [](const std::string& rel) { return (testsupport::data_dir() / rel).string(); };
    for (const char* k : {"path", "exclusions", "norms"}) doc["corpus"][k] = abs(doc["corpus"][k]);
    doc["rationale_bank"] = abs(doc["rationale_bank"]);
    doc["cache_dir"] = (scratch / "cache").string();
    doc["output_dir"] = (scratch / "out").string();
    doc["analysis"]["bootstrap_reps"] = 300;
    doc["analysis"]["chance_reps"] = 300;
    return doc;
}

fs::path write_json(const fs::path& path, const nlohmann::json& doc) {
    std::ofstream(path) << doc.dump(2);
    return path;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(METACOT_CLI) + " --log-level error " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Pipeline, ValidateSample) {
    testsupport::TempDir tmp("validate");
    const auto ws = load_workspace(fast_config(tmp.path()));
    EXPECT_EQ(validate_workspace(ws), "OK, 280 items, 6 conditions renderable");
    EXPECT_EQ(ws.split.test.size(), 150u);
}

TEST(Pipeline, RunIsCachedAndAlwaysBestScoresFour) {
    testsupport::TempDir tmp("pipeline");
    const auto ws = load_workspace(fast_config(tmp.path()));
    const std::size_t expected = ws.split.test.size() * ws.config.conditions.size() * ws.config.backends.size();

    const auto first = run_pipeline(ws);
    ASSERT_TRUE(first.complete());
    EXPECT_EQ(first.manifests.size(), 12u);
    EXPECT_EQ(first.backend_calls, expected);
    EXPECT_EQ(first.cache_hits, 0u);

    const auto second = run_pipeline(ws);
    EXPECT_EQ(second.backend_calls, 0u);
    EXPECT_EQ(second.cache_hits, expected);

    for (const auto& path : second.manifests) {
        const auto m = read_manifest(path);
        EXPECT_EQ(m.records.size(), 150u);
        EXPECT_EQ(m.seeds.at("letters"), 2u);
        EXPECT_EQ(m.example_order.size(), 10u);
        for (const auto& r : m.records) {
            EXPECT_TRUE(r.from_cache);
            EXPECT_TRUE(std::find(ws.split.test.begin(), ws.split.test.end(), r.item_id) != ws.split.test.end());
        }
        if (m.model == "mock-best") {
            EXPECT_DOUBLE_EQ(mean_appropriateness(m.scores()), 4.0);
        }
    }
    EXPECT_TRUE(fs::exists(ws.config.output_dir / "split.json"));

    const auto bundle = analyze(ws);
    ASSERT_EQ(bundle.models.size(), 2u);
    EXPECT_EQ(bundle.models[0].model, "mock-best");
    for (const auto& [c, r] : bundle.models[0].conditions) {
        EXPECT_EQ(r.mean->point, 4.0);
        EXPECT_EQ(*r.chance_hits, 0u);
    }
    for (const char* f : {"report.md", "report.json", "tables/means.csv"}) {
        EXPECT_TRUE(fs::exists(report_dir(ws.config) / f)) << f;
    }
}

TEST(Pipeline, ConditionFilter) {
    testsupport::TempDir tmp("filter");
    const auto ws = load_workspace(fast_config(tmp.path()));
    const auto s = run_pipeline(ws, std::vector<Condition>{Condition::qud});
    EXPECT_EQ(s.manifests.size(), 2u);
    EXPECT_EQ(s.backend_calls, 300u);
}

TEST(Pipeline, PartialRunIsRecordedAndRefusedByAnalysis) {
    testsupport::TempDir tmp("partial");
    auto cfg = fast_config(tmp.path());
    const auto ws0 = load_workspace(cfg);
    // A script that answers all but one test item.
    nlohmann::json script = nlohmann::json::object();
    for (std::size_t i = 1; i < ws0.split.test.size(); ++i) script[ws0.split.test[i]] = "The answer is b) x";
    const auto script_path = write_json(tmp.path() / "script.json", script);
    BackendSpec spec;
    spec.label = "scripted";
    spec.kind = "mock";
    spec.policy = "scripted";
    spec.script = script_path;
    cfg.backends = {spec};
    cfg.conditions = {Condition::no_rationale};
    const auto ws = load_workspace(cfg);

    const auto s = run_pipeline(ws);
    EXPECT_FALSE(s.complete());
    ASSERT_EQ(s.failures.size(), 1u);
    EXPECT_EQ(s.failures[0].second.item_id, ws.split.test.front());
    EXPECT_EQ(s.failures[0].second.kind, FailureKind::permanent);
    const auto m = read_manifest(s.manifests.at(0));
    EXPECT_EQ(m.records.size(), 149u);
    EXPECT_FALSE(m.complete());
    EXPECT_THROW(analyze(ws), InconsistencyError);
}

TEST(Cli, ExitCodes) {
    testsupport::TempDir tmp("cli");
    auto doc = config_json(tmp.path());
    const auto good = write_json(tmp.path() / "good.json", doc);
    EXPECT_EQ(cli("validate " + good.string()), 0);

    auto broken = doc;
    broken["examples"].erase(broken["examples"].size() - 1);
    EXPECT_EQ(cli("validate " + write_json(tmp.path() / "nine.json", broken).string()), 2);

    auto bad_corpus = doc;
    bad_corpus["corpus"]["path"] = (tmp.path() / "missing.jsonl").string();
    EXPECT_NE(cli("validate " + write_json(tmp.path() / "missing.json", bad_corpus).string()), 0);

    EXPECT_EQ(cli("run -c qud " + good.string()), 0);
    EXPECT_EQ(cli("analyze " + good.string()), 0);
    const auto bundle = tmp.path() / "out" / "report" / "report.json";
    ASSERT_TRUE(fs::exists(bundle));
    EXPECT_EQ(cli("report " + bundle.string() + " -f csv -o " + (tmp.path() / "csv").string()), 0);
    EXPECT_TRUE(fs::exists(tmp.path() / "csv" / "tables" / "chance.csv"));

    // A manifest from a different corpus makes the analysis inconsistent.
    const auto run_file = tmp.path() / "out" / "runs" / (make_run_id("mock-best", Condition::qud, "test") + ".json");
    ASSERT_TRUE(fs::exists(run_file));
    auto m = read_manifest(run_file);
    m.corpus_digest = "0000";
    write_manifest(m, run_file);
    EXPECT_EQ(cli("analyze " + good.string()), 4);

    // Scripted backend with an empty script: every item fails permanently.
    write_json(tmp.path() / "empty.json", nlohmann::json::object());
    auto partial = doc;
    partial["output_dir"] = (tmp.path() / "out2").string();
    partial["backends"] = nlohmann::json::array(
        {{{"label", "s"}, {"kind", "mock"}, {"policy", "scripted"}, {"script", (tmp.path() / "empty.json").string()}}});
    EXPECT_EQ(cli("run -c qud " + write_json(tmp.path() / "partial.json", partial).string()), 3);
}
