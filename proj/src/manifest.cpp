#include "metacot/manifest.hpp"

#include <algorithm>
#include <fstream>

#include "metacot/error.hpp"

namespace metacot {

using nlohmann::json;
namespace fs = std::filesystem;

ScoreVector RunManifest::scores() const {
    ScoreVector out;
    out.run_id = run_id;
    for (const auto& r : records) {
        if (r.appropriateness) {
            out.pairs.emplace_back(r.item_id, *r.appropriateness);
        } else {
            ++out.n_invalid;
        }
    }
    return out;
}

std::string make_run_id(std::string_view model, Condition condition, std::string_view split) {
    std::string id;
    for (char c : model) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                          c == '-' || c == '_' || c == '.';
        id.push_back(keep ? c : '_');
    }
    id += "__";
    id += to_string(condition);
    id += "__";
    id += split;
    return id;
}

json to_json(const RunManifest& m) {
    json records = json::array();
    for (const auto& r : m.records) {
        records.push_back({{"item_id", r.item_id},
                           {"prompt_digest", r.prompt_digest},
                           {"completion_text", r.completion_text},
                           {"letter", r.letter ? json(std::string(1, *r.letter)) : json()},
                           {"anchor", to_string(r.anchor)},
                           {"appropriateness", r.appropriateness ? json(*r.appropriateness) : json()},
                           {"from_cache", r.from_cache},
                           {"latency_ms", r.latency_ms},
                           {"attempts", r.attempts},
                           {"timestamp", r.timestamp}});
    }
    json failures = json::array();
    for (const auto& f : m.failures) {
        failures.push_back({{"item_id", f.item_id},
                            {"kind", to_string(f.kind)},
                            {"attempts", f.attempts},
                            {"message", f.message}});
    }
    return {{"run_id", m.run_id},
            {"model", m.model},
            {"backend_id", m.backend_id},
            {"condition", to_string(m.condition)},
            {"split", m.split},
            {"status", m.complete() ? "complete" : "partial"},
            {"corpus_digest", m.corpus_digest},
            {"template_version", m.template_version},
            {"params", m.params.canonical()},
            {"seeds", m.seeds},
            {"example_order", m.example_order},
            {"config", m.config},
            {"records", records},
            {"failures", failures}};
}

namespace {

FailureKind parse_failure_kind(std::string_view s) {
    for (auto k : {FailureKind::transient, FailureKind::permanent, FailureKind::auth, FailureKind::malformed}) {
        if (to_string(k) == s) return k;
    }
    throw ValidationError("unknown failure kind '" + std::string(s) + "'");
}

} // namespace

RunManifest manifest_from_json(const json& doc) {
    try {
        RunManifest m;
        m.run_id = doc.at("run_id").get<std::string>();
        m.model = doc.at("model").get<std::string>();
        m.backend_id = doc.at("backend_id").get<std::string>();
        m.condition = parse_condition(doc.at("condition").get<std::string>());
        m.split = doc.at("split").get<std::string>();
        m.corpus_digest = doc.at("corpus_digest").get<std::string>();
        m.template_version = doc.at("template_version").get<std::string>();
        const auto& p = doc.at("params");
        m.params.model = p.value("model", "");
        m.params.temperature = p.value("temperature", 0.2);
        m.params.max_tokens = p.value("max_tokens", 256);
        m.params.stop = p.value("stop", std::vector<std::string>{});
        m.params.extra = p.value("extra", json::object());
        m.seeds = doc.at("seeds").get<std::map<std::string, std::uint64_t>>();
        m.example_order = doc.value("example_order", std::vector<std::string>{});
        m.config = doc.value("config", json::object());
        for (const auto& r : doc.at("records")) {
            ManifestRecord rec;
            rec.item_id = r.at("item_id").get<std::string>();
            rec.prompt_digest = r.value("prompt_digest", "");
            rec.completion_text = r.value("completion_text", "");
            if (const auto& l = r.at("letter"); l.is_string() && !l.get<std::string>().empty()) {
                rec.letter = l.get<std::string>()[0];
            }
            rec.anchor = parse_anchor(r.value("anchor", "none"));
            if (const auto& a = r.at("appropriateness"); a.is_number_integer()) rec.appropriateness = a.get<int>();
            rec.from_cache = r.value("from_cache", false);
            rec.latency_ms = r.value("latency_ms", 0.0);
            rec.attempts = r.value("attempts", 0);
            rec.timestamp = r.value("timestamp", "");
            m.records.push_back(std::move(rec));
        }
        for (const auto& f : doc.at("failures")) {
            m.failures.push_back({f.at("item_id").get<std::string>(), parse_failure_kind(f.at("kind").get<std::string>()),
                                  f.value("attempts", 0), f.value("message", "")});
        }
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed run manifest: ") + e.what());
    }
}

void write_manifest(const RunManifest& m, const fs::path& path) {
    fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write manifest " + tmp.string());
        out << to_json(m).dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

RunManifest read_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open manifest '" + path.string() + "'");
    try {
        return manifest_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ValidationError("manifest '" + path.string() + "': " + e.what());
    }
}

std::vector<RunManifest> read_manifests(const fs::path& dir) {
    std::vector<fs::path> files;
    if (fs::is_directory(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<RunManifest> out;
    for (const auto& f : files) out.push_back(read_manifest(f));
    return out;
}

} // namespace metacot
