#include "metacot/config.hpp"

#include <fstream>

#include "metacot/error.hpp"

namespace metacot {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config: field '") + key + "' has the wrong type");
    }
}

const json& require(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw ValidationError(std::string("config: missing field '") + key + "'");
    return *it;
}

RequestParams parse_params(const json& doc, RequestParams base) {
    if (!doc.is_object()) throw ValidationError("config: params must be an object");
    base.model = get_or<std::string>(doc, "model", base.model);
    base.temperature = get_or<double>(doc, "temperature", base.temperature);
    base.max_tokens = get_or<int>(doc, "max_tokens", base.max_tokens);
    base.stop = get_or<std::vector<std::string>>(doc, "stop", base.stop);
    if (auto it = doc.find("extra"); it != doc.end() && !it->is_null()) base.extra = *it;
    base.validate();
    return base;
}

json params_json(const RequestParams& p) {
    return {{"model", p.model}, {"temperature", p.temperature}, {"max_tokens", p.max_tokens},
            {"stop", p.stop},   {"extra", p.extra}};
}

} // namespace

static Config parse_config_impl(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw ValidationError("config: top level must be an object");
    Config cfg;

    const auto& corpus = require(doc, "corpus");
    cfg.corpus = resolve(base_dir, require(corpus, "path").get<std::string>());
    cfg.corpus_format = parse_corpus_format(get_or<std::string>(corpus, "format", "jsonl"));
    if (auto p = get_or<std::string>(corpus, "exclusions", ""); !p.empty()) cfg.exclusions = resolve(base_dir, p);
    if (auto p = get_or<std::string>(corpus, "norms", ""); !p.empty()) cfg.norms = resolve(base_dir, p);
    if (corpus.contains("comprehensibility_threshold")) {
        const auto& t = corpus["comprehensibility_threshold"];
        cfg.comprehensibility_threshold = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
    }
    cfg.filter_source = parse_source(get_or<std::string>(corpus, "filter_source", "literary"));

    cfg.rationale_bank = resolve(base_dir, require(doc, "rationale_bank").get<std::string>());
    cfg.examples = require(doc, "examples").get<std::vector<std::string>>();

    if (auto it = doc.find("split"); it != doc.end()) {
        if (auto s = it->find("sizes"); s != it->end()) {
            const auto v = s->get<std::vector<std::size_t>>();
            if (v.size() != 3) throw ValidationError("config: split.sizes needs three entries");
            cfg.split_sizes = {v[0], v[1], v[2]};
        }
        cfg.evaluate_split = get_or<std::string>(*it, "evaluate", cfg.evaluate_split);
        if (cfg.evaluate_split != "train" && cfg.evaluate_split != "dev" && cfg.evaluate_split != "test") {
            throw ValidationError("config: split.evaluate must be train, dev or test");
        }
    }

    const auto letters = get_or<std::string>(doc, "letters", "shuffled");
    if (letters == "shuffled") {
        cfg.letters = LetterPolicy::Kind::shuffled;
    } else if (letters == "as_given") {
        cfg.letters = LetterPolicy::Kind::as_given;
    } else {
        throw ValidationError("config: letters must be 'shuffled' or 'as_given'");
    }

    if (auto it = doc.find("conditions"); it != doc.end()) {
        cfg.conditions.clear();
        for (const auto& c : *it) cfg.conditions.push_back(parse_condition(c.get<std::string>()));
    }

    RequestParams base_params;
    if (auto it = doc.find("params"); it != doc.end()) base_params = parse_params(*it, base_params);

    const auto& backends = require(doc, "backends");
    if (!backends.is_array() || backends.empty()) throw ValidationError("config: backends must be a non-empty array");
    for (const auto& b : backends) {
        BackendSpec spec;
        spec.label = require(b, "label").get<std::string>();
        spec.kind = require(b, "kind").get<std::string>();
        spec.params = b.contains("params") ? parse_params(b["params"], base_params) : base_params;
        if (spec.kind == "mock") {
            spec.policy = get_or<std::string>(b, "policy", spec.policy);
            spec.seed = get_or<std::uint64_t>(b, "seed", 0);
            const auto letter = get_or<std::string>(b, "letter", "a");
            spec.letter = letter.empty() ? 'a' : letter[0];
            if (auto p = get_or<std::string>(b, "script", ""); !p.empty()) spec.script = resolve(base_dir, p);
        } else if (spec.kind == "http") {
            spec.base_url = require(b, "base_url").get<std::string>();
            spec.api = get_or<std::string>(b, "api", spec.api);
            spec.api_key_env = get_or<std::string>(b, "api_key_env", spec.api_key_env);
            spec.timeout_s = get_or<int>(b, "timeout_s", spec.timeout_s);
        } else {
            throw ValidationError("config: backend kind must be 'mock' or 'http', got '" + spec.kind + "'");
        }
        for (const auto& other : cfg.backends) {
            if (other.label == spec.label) throw ValidationError("config: duplicate backend label '" + spec.label + "'");
        }
        cfg.backends.push_back(std::move(spec));
    }

    cfg.parallelism = get_or<std::size_t>(doc, "parallelism", cfg.parallelism);
    if (cfg.parallelism == 0) throw ValidationError("config: parallelism must be positive");
    cfg.requests_per_second = get_or<double>(doc, "requests_per_second", 0.0);
    if (auto it = doc.find("retry"); it != doc.end()) {
        cfg.retry.max_retries = get_or<int>(*it, "max_retries", cfg.retry.max_retries);
        cfg.retry.base_delay = std::chrono::milliseconds(get_or<std::int64_t>(*it, "base_delay_ms", 1000));
        cfg.retry.multiplier = get_or<double>(*it, "multiplier", cfg.retry.multiplier);
        cfg.retry.max_delay = std::chrono::milliseconds(get_or<std::int64_t>(*it, "max_delay_ms", 60000));
    }

    cfg.cache_dir = resolve(base_dir, get_or<std::string>(doc, "cache_dir", "cache"));
    cfg.output_dir = resolve(base_dir, get_or<std::string>(doc, "output_dir", "out"));

    const auto& seeds = require(doc, "seeds");
    cfg.seeds.split = require(seeds, "split").get<std::uint64_t>();
    cfg.seeds.letters = require(seeds, "letters").get<std::uint64_t>();
    cfg.seeds.example_order = require(seeds, "example_order").get<std::uint64_t>();
    cfg.seeds.bootstrap = require(seeds, "bootstrap").get<std::uint64_t>();
    cfg.seeds.chance = require(seeds, "chance").get<std::uint64_t>();

    if (auto it = doc.find("analysis"); it != doc.end()) {
        cfg.analysis.bootstrap_reps = get_or<std::size_t>(*it, "bootstrap_reps", cfg.analysis.bootstrap_reps);
        cfg.analysis.chance_reps = get_or<std::size_t>(*it, "chance_reps", cfg.analysis.chance_reps);
        cfg.analysis.level = get_or<double>(*it, "level", cfg.analysis.level);
        cfg.analysis.gap_k = get_or<std::size_t>(*it, "gap_k", cfg.analysis.gap_k);
    }
    return cfg;
}

Config parse_config(const json& doc, const fs::path& base_dir) {
    try {
        return parse_config_impl(doc, base_dir);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

Config load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config '" + path.string() + "': " + e.what());
    }
    auto cfg = parse_config(doc, fs::absolute(path).parent_path());
    cfg.source = fs::absolute(path);
    return cfg;
}

json Config::to_json() const {
    json corpus_j = {{"path", corpus.string()},
                     {"format", corpus_format == CorpusFormat::csv ? "csv" : "jsonl"},
                     {"exclusions", exclusions ? json(exclusions->string()) : json()},
                     {"norms", norms ? json(norms->string()) : json()},
                     {"comprehensibility_threshold",
                      comprehensibility_threshold ? json(*comprehensibility_threshold) : json()},
                     {"filter_source", to_string(filter_source)}};
    json conds = json::array();
    for (auto c : conditions) conds.push_back(to_string(c));
    json backs = json::array();
    for (const auto& b : backends) {
        json j = {{"label", b.label}, {"kind", b.kind}, {"params", params_json(b.params)}};
        if (b.kind == "mock") {
            j["policy"] = b.policy;
            j["seed"] = b.seed;
            j["letter"] = std::string(1, b.letter);
            if (b.script) j["script"] = b.script->string();
        } else {
            j["base_url"] = b.base_url;
            j["api"] = b.api;
            j["api_key_env"] = b.api_key_env;
            j["timeout_s"] = b.timeout_s;
        }
        backs.push_back(std::move(j));
    }
    return {{"corpus", corpus_j},
            {"rationale_bank", rationale_bank.string()},
            {"examples", examples},
            {"split",
             {{"sizes", {split_sizes.train, split_sizes.dev, split_sizes.test}}, {"evaluate", evaluate_split}}},
            {"letters", letters == LetterPolicy::Kind::shuffled ? "shuffled" : "as_given"},
            {"conditions", conds},
            {"backends", backs},
            {"parallelism", parallelism},
            {"requests_per_second", requests_per_second},
            {"retry",
             {{"max_retries", retry.max_retries},
              {"base_delay_ms", retry.base_delay.count()},
              {"multiplier", retry.multiplier},
              {"max_delay_ms", retry.max_delay.count()}}},
            {"cache_dir", cache_dir.string()},
            {"output_dir", output_dir.string()},
            {"seeds",
             {{"split", seeds.split},
              {"letters", seeds.letters},
              {"example_order", seeds.example_order},
              {"bootstrap", seeds.bootstrap},
              {"chance", seeds.chance}}},
            {"analysis",
             {{"bootstrap_reps", analysis.bootstrap_reps},
              {"chance_reps", analysis.chance_reps},
              {"level", analysis.level},
              {"gap_k", analysis.gap_k}}}};
}

} // namespace metacot
