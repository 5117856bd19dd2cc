#include "metacot/pipeline.hpp"

#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "metacot/error.hpp"
#include "metacot/http_backend.hpp"
#include "metacot/mock_backend.hpp"
#include "metacot/parser.hpp"

namespace metacot {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path runs_dir(const Config& config) { return config.output_dir / "runs"; }
fs::path report_dir(const Config& config) { return config.output_dir / "report"; }

Workspace load_workspace(const Config& config) {
    Workspace ws;
    ws.config = config;
    if (!fs::exists(config.corpus)) throw ValidationError("corpus file not found: " + config.corpus.string());
    auto corpus = load_corpus(config.corpus, config.corpus_format);
    if (config.norms) corpus = join_norms(corpus, load_norms(*config.norms));
    if (config.exclusions) corpus = apply_exclusions(corpus, load_exclusions(*config.exclusions));
    if (config.comprehensibility_threshold) {
        corpus = filter_comprehensible(corpus, *config.comprehensibility_threshold, config.filter_source);
    }
    ws.corpus = std::move(corpus);
    ws.split = split_corpus(ws.corpus, config.seeds.split, config.split_sizes, config.examples);
    ws.bank = load_rationale_bank(config.rationale_bank, ws.corpus);
    for (const auto* item : ws.corpus.included()) {
        if (item->familiarity) ws.familiarity[item->id] = *item->familiarity;
    }
    return ws;
}

namespace {

LetterPolicy letter_policy(const Config& c) {
    return c.letters == LetterPolicy::Kind::shuffled ? LetterPolicy::shuffled(c.seeds.letters)
                                                     : LetterPolicy::as_given();
}

} // namespace

std::string validate_workspace(const Workspace& ws) {
    const auto& cfg = ws.config;
    for (const auto* item : ws.corpus.included()) validate_item(*item);
    for (const auto& id : cfg.examples) {
        if (!ws.bank.contains(id)) throw ValidationError("example '" + id + "' has no rationale bank entry");
    }
    PromptBuilder builder(ws.corpus, ws.bank, ws.split, cfg.examples, cfg.seeds.example_order);
    const auto& eval = ws.split.named(cfg.evaluate_split);
    if (eval.empty()) throw ValidationError("evaluated split '" + cfg.evaluate_split + "' is empty");
    const auto& target = ws.corpus.at(eval.front());
    for (auto c : cfg.conditions) {
        const auto p = builder.render(c, target, assign_letters(target, letter_policy(cfg)));
        if (p.text.rfind(kInstruction, 0) != 0) throw ValidationError("rendered prompt lacks the instruction");
    }
    for (const auto& b : cfg.backends) make_backend(b);
    return "OK, " + std::to_string(ws.corpus.included_count()) + " items, " + std::to_string(cfg.conditions.size()) +
           " conditions renderable";
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
    if (spec.kind == "http") {
        HttpBackendConfig hc;
        hc.base_url = spec.base_url;
        hc.api = parse_http_api(spec.api);
        hc.api_key_env = spec.api_key_env;
        hc.timeout = std::chrono::seconds(spec.timeout_s);
        return std::make_unique<HttpBackend>(std::move(hc));
    }
    switch (parse_mock_policy(spec.policy)) {
    case MockBackend::Policy::always_best: return std::make_unique<MockBackend>(MockBackend::always_best());
    case MockBackend::Policy::uniform_random:
        return std::make_unique<MockBackend>(MockBackend::uniform_random(spec.seed));
    case MockBackend::Policy::fixed_letter:
        return std::make_unique<MockBackend>(MockBackend::fixed_letter(spec.letter));
    case MockBackend::Policy::scripted: {
        if (!spec.script) throw ValidationError("backend '" + spec.label + "': scripted mock needs a script file");
        std::ifstream in(*spec.script);
        if (!in) throw ValidationError("cannot open mock script " + spec.script->string());
        try {
            return std::make_unique<MockBackend>(
                MockBackend::scripted(json::parse(in).get<std::map<std::string, std::string, std::less<>>>()));
        } catch (const json::exception& e) {
            throw ValidationError("mock script " + spec.script->string() + ": " + e.what());
        }
    }
    }
    throw ValidationError("unknown backend");
}

json split_to_json(const SplitCorpus& split) {
    return {{"seed", split.seed},
            {"sizes", {split.sizes.train, split.sizes.dev, split.sizes.test}},
            {"train", split.train},
            {"dev", split.dev},
            {"test", split.test}};
}

namespace {

void write_json(const fs::path& path, const json& doc) {
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << doc.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

} // namespace

RunSummary run_pipeline(const Workspace& ws, const std::optional<std::vector<Condition>>& only) {
    const auto& cfg = ws.config;
    write_json(cfg.output_dir / "split.json", split_to_json(ws.split));

    std::vector<Condition> conditions;
    for (auto c : cfg.conditions) {
        if (!only || std::find(only->begin(), only->end(), c) != only->end()) conditions.push_back(c);
    }

    PromptBuilder builder(ws.corpus, ws.bank, ws.split, cfg.examples, cfg.seeds.example_order);
    const auto policy = letter_policy(cfg);
    const auto& eval_ids = ws.split.named(cfg.evaluate_split);
    std::map<std::string, LetterAssignment> letter_maps;
    for (const auto& id : eval_ids) letter_maps.emplace(id, assign_letters(ws.corpus.at(id), policy));

    CompletionCache cache(cfg.cache_dir);
    RateLimiter limiter(cfg.requests_per_second, std::max(1.0, static_cast<double>(cfg.parallelism)));

    RunSummary summary;
    for (const auto& spec : cfg.backends) {
        auto backend = make_backend(spec);
        CompletionClient client(*backend, &cache, cfg.retry, &limiter);
        auto params = spec.params;
        if (params.model.empty()) params.model = spec.label;

        for (auto condition : conditions) {
            std::vector<WorkItem> work;
            std::map<std::string, std::string> digests;
            for (const auto& id : eval_ids) {
                const auto& item = ws.corpus.at(id);
                const auto& lm = letter_maps.at(id);
                auto prompt = builder.render(condition, item, lm);
                work.push_back({id, std::move(prompt.text), lm.best_letter(item)});
            }
            const auto run = run_experiment(client, work, condition, params, cfg.parallelism);

            RunManifest m;
            m.run_id = make_run_id(spec.label, condition, cfg.evaluate_split);
            m.model = spec.label;
            m.backend_id = run.backend_id;
            m.condition = condition;
            m.split = cfg.evaluate_split;
            m.corpus_digest = ws.corpus.digest();
            m.template_version = std::string(kTemplateVersion);
            m.params = params;
            m.seeds = {{"split", cfg.seeds.split},
                       {"letters", cfg.seeds.letters},
                       {"example_order", cfg.seeds.example_order}};
            m.example_order = builder.example_order();
            m.config = cfg.to_json();
            for (const auto& r : run.records) {
                const auto& item = ws.corpus.at(r.item_id);
                const auto parsed = extract_answer(r.completion_text, r.item_id);
                const auto scored = score_answer(parsed, letter_maps.at(r.item_id), item);
                m.records.push_back({r.item_id, r.prompt_digest, r.completion_text, parsed.letter,
                                     parsed.matched_anchor, scored.appropriateness, r.from_cache, r.latency_ms,
                                     r.attempts, r.timestamp});
            }
            m.failures = run.failures;
            const auto path = runs_dir(cfg) / (m.run_id + ".json");
            write_manifest(m, path);
            summary.manifests.push_back(path);
            summary.items += work.size();
            for (const auto& f : run.failures) summary.failures.emplace_back(m.run_id, f);

            const auto n_valid = std::count_if(m.records.begin(), m.records.end(),
                                               [](const auto& r) { return r.appropriateness.has_value(); });
            spdlog::info("{}: {} records ({} valid), {} failures", m.run_id, m.records.size(), n_valid,
                         m.failures.size());
        }
        summary.backend_calls += client.backend_calls();
        summary.cache_hits += client.cache_hits();
    }
    return summary;
}

ReportBundle analyze(const Workspace& ws) {
    const auto& cfg = ws.config;
    auto manifests = read_manifests(runs_dir(cfg));
    std::erase_if(manifests, [&](const RunManifest& m) { return m.split != cfg.evaluate_split; });

    ReportSettings settings;
    settings.bootstrap_reps = cfg.analysis.bootstrap_reps;
    settings.chance_reps = cfg.analysis.chance_reps;
    settings.level = cfg.analysis.level;
    settings.gap_k = cfg.analysis.gap_k;
    settings.bootstrap_seed = cfg.seeds.bootstrap;
    settings.chance_seed = cfg.seeds.chance;

    auto bundle = build_report(manifests, ws.familiarity, settings);
    const auto dir = report_dir(cfg);
    for (auto f : {ReportFormat::markdown, ReportFormat::csv, ReportFormat::json}) emit(bundle, f, dir);
    return bundle;
}

} // namespace metacot
