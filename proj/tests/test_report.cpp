#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "metacot/error.hpp"
#include "metacot/report.hpp"
#include "support.hpp"

using namespace metacot;

namespace {

// A complete run over n items whose scores come from `score(i)`; 0 marks an invalid answer.
template <typename F>
RunManifest synthetic_run(const std::string& model, Condition c, std::size_t n, F score) {
    RunManifest m;
    m.model = model;
    m.backend_id = "mock:" + model;
    m.condition = c;
    m.split = "test";
    m.run_id = make_run_id(model, c, m.split);
    m.corpus_digest = "d1";
    m.template_version = "metacot-v1";
    m.seeds = {{"split", 1}, {"letters", 2}, {"example_order", 3}};
    for (std::size_t i = 0; i < n; ++i) {
        ManifestRecord r;
        r.item_id = "i" + std::to_string(1000 + i);
        const int v = score(i);
        if (v > 0) {
            r.appropriateness = v;
            r.letter = 'a';
            r.anchor = Anchor::answer_is;
        }
        m.records.push_back(r);
    }
    return m;
}

std::vector<RunManifest> six_random_runs(const std::string& model, std::uint64_t seed) {
    std::vector<RunManifest> out;
    std::mt19937_64 eng(seed);
    for (auto c : kAllConditions) {
        std::vector<int> v(60);
        for (auto& x : v) x = 1 + static_cast<int>(eng() % 4);
        out.push_back(synthetic_run(model, c, v.size(), [&](std::size_t i) { return v[i]; }));
    }
    return out;
}

std::map<std::string, double> familiarity_for(std::size_t n) {
    std::map<std::string, double> fam;
    for (std::size_t i = 0; i < n; ++i) fam["i" + std::to_string(1000 + i)] = static_cast<double>((i * 37) % 11);
    return fam;
}

ReportSettings small_settings() {
    ReportSettings s;
    s.bootstrap_reps = 500;
    s.chance_reps = 500;
    s.bootstrap_seed = 4;
    s.chance_seed = 5;
    s.gap_k = 10;
    return s;
}

} // namespace

TEST(Report, Structure) {
    const auto b = build_report(six_random_runs("m", 1), familiarity_for(60), small_settings());
    ASSERT_EQ(b.models.size(), 1u);
    EXPECT_EQ(b.models[0].conditions.size(), 6u);
    EXPECT_EQ(b.models[0].correlations.size(), 15u);
    for (const auto& cell : b.models[0].correlations) {
        ASSERT_TRUE(cell.r);
        EXPECT_LE(std::fabs(*cell.r), 1.0);
        EXPECT_EQ(cell.n, 60u);
    }
    for (const auto& [c, r] : b.models[0].conditions) {
        EXPECT_EQ(r.histogram.n_valid(), r.n_valid);
        EXPECT_TRUE(r.gap);
    }
    EXPECT_EQ(b.seeds.at("bootstrap"), 4u);
    EXPECT_EQ(b.seeds.at("chance"), 5u);
}

TEST(Report, MeansMatchStatsModule) {
    const auto runs = six_random_runs("m", 2);
    const auto settings = small_settings();
    const auto b = build_report(runs, familiarity_for(60), settings);
    for (const auto& run : runs) {
        const auto& r = b.models[0].conditions.at(run.condition);
        const auto expect = bootstrap_ci(run.scores(), settings.bootstrap_reps, settings.level, r.mean->seed);
        EXPECT_EQ(*r.mean, expect);
        EXPECT_DOUBLE_EQ(r.mean->point, mean_appropriateness(run.scores()));
    }
}

TEST(Report, InconsistentInputsRejected) {
    const auto fam = familiarity_for(60);
    auto runs = six_random_runs("m", 3);
    auto bad = runs;
    bad[2].corpus_digest = "other";
    EXPECT_THROW(build_report(bad, fam, small_settings()), InconsistencyError);

    bad = runs;
    bad[3].template_version = "metacot-v0";
    EXPECT_THROW(build_report(bad, fam, small_settings()), InconsistencyError);

    bad = runs;
    bad.push_back(runs[0]);
    EXPECT_THROW(build_report(bad, fam, small_settings()), InconsistencyError);

    bad = runs;
    bad[1].failures.push_back({"i1003", FailureKind::transient, 6, "HTTP 503"});
    EXPECT_THROW(build_report(bad, fam, small_settings()), InconsistencyError);

    bad = runs;
    bad[4].split = "dev";
    EXPECT_THROW(build_report(bad, fam, small_settings()), InconsistencyError);
}

TEST(Report, AlwaysBestRowInMarkdown) {
    std::vector<RunManifest> runs;
    for (auto c : kAllConditions) runs.push_back(synthetic_run("mock-best", c, 40, [](std::size_t) { return 4; }));
    const auto b = build_report(runs, familiarity_for(40), small_settings());
    const auto md = render_markdown(b);
    EXPECT_NE(md.find("| mock-best | 4.00 [4.00, 4.00] |"), std::string::npos) << md;
    // Zero variance: correlations are not estimable and say so.
    EXPECT_NE(md.find("n/a"), std::string::npos);
    const auto& r = b.models[0].conditions.at(Condition::qud);
    EXPECT_EQ(*r.chance_hits, 0u);
    EXPECT_FALSE(r.familiarity);
    EXPECT_FALSE(r.familiarity_note.empty());
}

TEST(Report, MissingConditionsShownAsAbsent) {
    std::vector<RunManifest> runs{synthetic_run("solo", Condition::qud, 30, [](std::size_t i) { return 1 + static_cast<int>(i % 4); })};
    const auto b = build_report(runs, familiarity_for(30), small_settings());
    EXPECT_EQ(b.models[0].conditions.size(), 1u);
    EXPECT_TRUE(b.models[0].correlations.empty());
    ASSERT_FALSE(b.notices.empty());
    const auto md = render_markdown(b);
    EXPECT_NE(md.find("—"), std::string::npos);
    EXPECT_NE(md.find(b.notices.front()), std::string::npos);
}

TEST(Report, JsonRoundTrip) {
    auto runs = six_random_runs("alpha", 4);
    const auto more = six_random_runs("beta", 5);
    runs.insert(runs.end(), more.begin(), more.end());
    // Some invalid answers.
    runs[2].records[5].appropriateness.reset();
    runs[2].records[5].letter.reset();
    const auto b = build_report(runs, familiarity_for(60), small_settings());
    EXPECT_EQ(b.models[0].conditions.at(runs[2].condition).n_invalid, 1u);
    const auto back = bundle_from_json(nlohmann::json::parse(render_json(b)));
    EXPECT_EQ(back, b);
    EXPECT_EQ(render_markdown(back), render_markdown(b));
    EXPECT_EQ(render_csv(back), render_csv(b));
}

TEST(Report, CsvHistogramsSumToValidCounts) {
    const auto b = build_report(six_random_runs("m", 6), familiarity_for(60), small_settings());
    const auto tables = render_csv(b);
    std::istringstream in(tables.at("histograms.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "model,condition,score,count");
    std::map<std::string, std::size_t> sums;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string tok; std::getline(ls, tok, ',');) f.push_back(tok);
        ASSERT_EQ(f.size(), 4u);
        sums[f[1]] += std::stoul(f[3]);
        ++rows;
    }
    EXPECT_EQ(rows, 24u);
    for (const auto& [c, r] : b.models[0].conditions) EXPECT_EQ(sums.at(std::string(to_string(c))), r.n_valid);
    EXPECT_EQ(tables.size(), 7u);
}

TEST(Report, SignificanceStars) {
    EXPECT_EQ(significance_stars(0.2), "");
    EXPECT_EQ(significance_stars(0.04), "*");
    EXPECT_EQ(significance_stars(0.0009), "**");
}

TEST(Report, EmitIsByteDeterministic) {
    testsupport::TempDir tmp("report");
    const auto runs = six_random_runs("m", 7);
    const auto read = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    std::map<std::string, std::string> first;
    for (int round = 0; round < 2; ++round) {
        const auto b = build_report(runs, familiarity_for(60), small_settings());
        const auto dir = tmp.path() / std::to_string(round);
        std::vector<std::filesystem::path> files;
        for (auto f : {ReportFormat::markdown, ReportFormat::csv, ReportFormat::json}) {
            const auto written = emit(b, f, dir);
            files.insert(files.end(), written.begin(), written.end());
        }
        EXPECT_EQ(files.size(), 9u);
        for (const auto& p : files) {
            const auto rel = std::filesystem::relative(p, dir).string();
            if (round == 0) {
                first[rel] = read(p);
            } else {
                EXPECT_EQ(read(p), first.at(rel)) << rel;
            }
        }
    }
    EXPECT_EQ(parse_report_format("csv"), ReportFormat::csv);
    EXPECT_THROW(parse_report_format("xlsx"), ValidationError);
}
