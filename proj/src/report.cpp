#include "metacot/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "metacot/error.hpp"

namespace metacot {

using nlohmann::json;
namespace fs = std::filesystem;

std::optional<double> ConditionResult::chance_p(std::size_t reps) const {
    if (!chance_hits || reps == 0) return std::nullopt;
    return static_cast<double>(*chance_hits) / static_cast<double>(reps);
}

std::string significance_stars(double p) {
    if (p < 0.001) return "**";
    if (p < 0.05) return "*";
    return "";
}

namespace {

std::string fixed(double v, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    // No negative zero in rendered tables.
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

// Correlation style from the published tables: ".35", "-.07".
std::string r_style(double r) {
    auto s = fixed(r);
    if (s.rfind("0.", 0) == 0) return s.substr(1);
    if (s.rfind("-0.", 0) == 0) return "-" + s.substr(2);
    return s;
}

std::string p_style(const ConditionResult& c, std::size_t reps) {
    if (!c.chance_hits) return "n/a";
    if (*c.chance_hits == 0) return "<" + fixed(1.0 / static_cast<double>(reps), 4);
    return fixed(*c.chance_p(reps), 4);
}

constexpr std::string_view kAbsent = "—";

const ConditionResult* find_cell(const ModelReport& m, Condition c) {
    auto it = m.conditions.find(c);
    return it == m.conditions.end() ? nullptr : &it->second;
}

std::vector<Condition> conditions_present(const ModelReport& m) {
    std::vector<Condition> out;
    for (auto c : kAllConditions) {
        if (m.conditions.contains(c)) out.push_back(c);
    }
    return out;
}

} // namespace

ReportBundle build_report(const std::vector<RunManifest>& manifests,
                          const std::map<std::string, double>& familiarity, const ReportSettings& settings) {
    ReportBundle bundle;
    bundle.settings = settings;
    if (manifests.empty()) {
        bundle.notices.push_back("no runs to analyze");
        return bundle;
    }

    const auto& first = manifests.front();
    bundle.corpus_digest = first.corpus_digest;
    bundle.template_version = first.template_version;
    bundle.split = first.split;
    bundle.seeds = first.seeds;

    std::set<std::pair<std::string, Condition>> seen;
    std::map<std::string, const RunManifest*> by_run;
    for (const auto& m : manifests) {
        if (m.corpus_digest != bundle.corpus_digest) {
            throw InconsistencyError("run " + m.run_id + " was made on a different corpus (digest " +
                                     m.corpus_digest.substr(0, 12) + " vs " + bundle.corpus_digest.substr(0, 12) + ")");
        }
        if (m.template_version != bundle.template_version) {
            throw InconsistencyError("run " + m.run_id + " uses template " + m.template_version);
        }
        if (m.split != bundle.split) throw InconsistencyError("run " + m.run_id + " evaluates split " + m.split);
        if (m.seeds != bundle.seeds) throw InconsistencyError("run " + m.run_id + " was made with different seeds");
        if (!m.complete()) {
            throw InconsistencyError("run " + m.run_id + " is partial (" + std::to_string(m.failures.size()) +
                                     " failed items); rerun to complete it");
        }
        if (!seen.emplace(m.model, m.condition).second) {
            throw InconsistencyError("duplicate run for model " + m.model + ", condition " +
                                     std::string(to_string(m.condition)));
        }
        by_run[m.run_id] = &m;
    }
    bundle.seeds["bootstrap"] = settings.bootstrap_seed;
    bundle.seeds["chance"] = settings.chance_seed;

    std::map<std::string, ModelReport> models;
    std::map<std::string, std::map<Condition, ScoreVector>> score_vectors;
    for (const auto& [run_id, m] : by_run) {
        bundle.run_ids.push_back(run_id);
        auto& model = models[m->model];
        model.model = m->model;
        if (!model.backend_id.empty() && model.backend_id != m->backend_id) {
            throw InconsistencyError("model " + m->model + " maps to two backends");
        }
        model.backend_id = m->backend_id;

        const auto scores = m->scores();
        scores.validate();
        score_vectors[m->model][m->condition] = scores;

        ConditionResult cell;
        cell.run_id = run_id;
        cell.condition = m->condition;
        cell.n_valid = scores.pairs.size();
        cell.n_invalid = scores.n_invalid;
        cell.histogram = histogram(scores);
        if (!scores.pairs.empty()) {
            cell.mean = bootstrap_ci(scores, settings.bootstrap_reps, settings.level, settings.bootstrap_seed);
            cell.chance_hits = chance_test(scores.values(), settings.chance_reps, settings.chance_seed).hits;
        }

        ScoreVector with_norm;
        with_norm.run_id = scores.run_id;
        for (const auto& pr : scores.pairs) {
            if (familiarity.contains(pr.first)) with_norm.pairs.push_back(pr);
        }
        try {
            const auto fit = fit_ordinal(with_norm, familiarity);
            if (std::isfinite(fit.se) && !fit.separated) {
                cell.familiarity = FamiliarityEffect{fit.beta, fit.se, fit.ci_low, fit.ci_high, fit.thresholds,
                                                     fit.categories, fit.converged, fit.iterations};
                if (!fit.converged) cell.familiarity_note = fit.message;
            } else {
                cell.familiarity_note = fit.message.empty() ? "not estimable" : fit.message;
            }
        } catch (const StatsError& e) {
            cell.familiarity_note = e.what();
        }
        try {
            cell.gap = familiarity_gap(with_norm, familiarity, settings.gap_k);
        } catch (const StatsError& e) {
            cell.gap_note = e.what();
        }
        model.conditions[m->condition] = std::move(cell);
    }

    for (auto& [name, model] : models) {
        const auto present = conditions_present(model);
        if (present.size() < 2) {
            bundle.notices.push_back("model " + name + ": correlation matrix omitted (fewer than two conditions)");
        }
        for (std::size_t i = 0; i < present.size(); ++i) {
            for (std::size_t j = i + 1; j < present.size(); ++j) {
                CorrelationCell cc;
                cc.a = present[i];
                cc.b = present[j];
                try {
                    const auto res = pearson(score_vectors[name][cc.a], score_vectors[name][cc.b]);
                    cc.r = res.r;
                    cc.p = res.p;
                    cc.n = res.n;
                } catch (const StatsError& e) {
                    cc.note = e.what();
                }
                model.correlations.push_back(std::move(cc));
            }
        }
        bundle.models.push_back(std::move(model));
    }
    return bundle;
}

// ---------------------------------------------------------------- json

namespace {

json bootstrap_json(const BootstrapResult& b) {
    return {{"point", b.point}, {"ci_low", b.ci_low}, {"ci_high", b.ci_high},
            {"reps", b.reps},   {"level", b.level},   {"seed", b.seed}};
}

BootstrapResult bootstrap_from(const json& j) {
    return {j.at("point").get<double>(), j.at("ci_low").get<double>(), j.at("ci_high").get<double>(),
            j.at("reps").get<std::size_t>(), j.at("level").get<double>(), j.at("seed").get<std::uint64_t>()};
}

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json();
}

template <typename T>
std::optional<T> opt_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

} // namespace

json to_json(const ReportBundle& b) {
    json models = json::array();
    for (const auto& m : b.models) {
        json conds = json::array();
        for (const auto& [c, r] : m.conditions) {
            json fam;
            if (r.familiarity) {
                const auto& f = *r.familiarity;
                fam = {{"beta", f.beta},
                       {"se", f.se},
                       {"ci_low", f.ci_low},
                       {"ci_high", f.ci_high},
                       {"thresholds", f.thresholds},
                       {"categories", f.categories},
                       {"converged", f.converged},
                       {"iterations", f.iterations}};
            }
            conds.push_back({{"condition", to_string(c)},
                             {"run_id", r.run_id},
                             {"n_valid", r.n_valid},
                             {"n_invalid", r.n_invalid},
                             {"mean", r.mean ? bootstrap_json(*r.mean) : json()},
                             {"chance_hits", opt(r.chance_hits)},
                             {"chance_p", opt(r.chance_p(b.settings.chance_reps))},
                             {"histogram", r.histogram.counts},
                             {"familiarity", fam},
                             {"familiarity_note", r.familiarity_note},
                             {"gap", opt(r.gap)},
                             {"gap_note", r.gap_note}});
        }
        json corr = json::array();
        for (const auto& c : m.correlations) {
            corr.push_back({{"a", to_string(c.a)},
                            {"b", to_string(c.b)},
                            {"r", opt(c.r)},
                            {"p", opt(c.p)},
                            {"n", c.n},
                            {"note", c.note}});
        }
        models.push_back({{"model", m.model}, {"backend_id", m.backend_id}, {"conditions", conds}, {"correlations", corr}});
    }
    return {{"run_ids", b.run_ids},
            {"corpus_digest", b.corpus_digest},
            {"template_version", b.template_version},
            {"split", b.split},
            {"seeds", b.seeds},
            {"settings",
             {{"bootstrap_reps", b.settings.bootstrap_reps},
              {"chance_reps", b.settings.chance_reps},
              {"level", b.settings.level},
              {"gap_k", b.settings.gap_k},
              {"bootstrap_seed", b.settings.bootstrap_seed},
              {"chance_seed", b.settings.chance_seed}}},
            {"notices", b.notices},
            {"models", models}};
}

ReportBundle bundle_from_json(const json& doc) {
    try {
        ReportBundle b;
        b.run_ids = doc.at("run_ids").get<std::vector<std::string>>();
        b.corpus_digest = doc.at("corpus_digest").get<std::string>();
        b.template_version = doc.at("template_version").get<std::string>();
        b.split = doc.at("split").get<std::string>();
        b.seeds = doc.at("seeds").get<std::map<std::string, std::uint64_t>>();
        const auto& s = doc.at("settings");
        b.settings = {s.at("bootstrap_reps").get<std::size_t>(), s.at("chance_reps").get<std::size_t>(),
                      s.at("level").get<double>(),                s.at("gap_k").get<std::size_t>(),
                      s.at("bootstrap_seed").get<std::uint64_t>(), s.at("chance_seed").get<std::uint64_t>()};
        b.notices = doc.at("notices").get<std::vector<std::string>>();
        for (const auto& mj : doc.at("models")) {
            ModelReport m;
            m.model = mj.at("model").get<std::string>();
            m.backend_id = mj.at("backend_id").get<std::string>();
            for (const auto& cj : mj.at("conditions")) {
                ConditionResult r;
                r.condition = parse_condition(cj.at("condition").get<std::string>());
                r.run_id = cj.at("run_id").get<std::string>();
                r.n_valid = cj.at("n_valid").get<std::size_t>();
                r.n_invalid = cj.at("n_invalid").get<std::size_t>();
                if (!cj.at("mean").is_null()) r.mean = bootstrap_from(cj.at("mean"));
                r.chance_hits = opt_from<std::size_t>(cj.at("chance_hits"));
                r.histogram.counts = cj.at("histogram").get<std::array<std::size_t, 4>>();
                r.histogram.n_invalid = r.n_invalid;
                if (const auto& f = cj.at("familiarity"); !f.is_null()) {
                    r.familiarity = FamiliarityEffect{f.at("beta").get<double>(),
                                                      f.at("se").get<double>(),
                                                      f.at("ci_low").get<double>(),
                                                      f.at("ci_high").get<double>(),
                                                      f.at("thresholds").get<std::vector<double>>(),
                                                      f.at("categories").get<std::vector<int>>(),
                                                      f.at("converged").get<bool>(),
                                                      f.at("iterations").get<int>()};
                }
                r.familiarity_note = cj.at("familiarity_note").get<std::string>();
                r.gap = opt_from<double>(cj.at("gap"));
                r.gap_note = cj.at("gap_note").get<std::string>();
                m.conditions[r.condition] = std::move(r);
            }
            for (const auto& cj : mj.at("correlations")) {
                CorrelationCell c;
                c.a = parse_condition(cj.at("a").get<std::string>());
                c.b = parse_condition(cj.at("b").get<std::string>());
                c.r = opt_from<double>(cj.at("r"));
                c.p = opt_from<double>(cj.at("p"));
                c.n = cj.at("n").get<std::size_t>();
                c.note = cj.at("note").get<std::string>();
                m.correlations.push_back(std::move(c));
            }
            b.models.push_back(std::move(m));
        }
        return b;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed report bundle: ") + e.what());
    }
}

std::string render_json(const ReportBundle& bundle) { return to_json(bundle).dump(2) + "\n"; }

// ---------------------------------------------------------------- markdown

namespace {

void table_header(std::ostringstream& os) {
    os << "| Model |";
    for (auto c : kAllConditions) os << ' ' << display_name(c) << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < kAllConditions.size(); ++i) os << "---|";
    os << '\n';
}

template <typename F>
void table_rows(std::ostringstream& os, const ReportBundle& b, F cell_text) {
    for (const auto& m : b.models) {
        os << "| " << m.model << " |";
        for (auto c : kAllConditions) {
            const auto* cell = find_cell(m, c);
            os << ' ' << (cell ? cell_text(*cell) : std::string(kAbsent)) << " |";
        }
        os << '\n';
    }
}

const CorrelationCell* find_corr(const ModelReport& m, Condition a, Condition b) {
    for (const auto& c : m.correlations) {
        if (c.a == a && c.b == b) return &c;
    }
    return nullptr;
}

} // namespace

std::string render_markdown(const ReportBundle& b) {
    std::ostringstream os;
    const auto level_pct = fixed(b.settings.level * 100, 0);
    os << "# Metaphor paraphrase selection report\n\n";
    os << "- Corpus digest: `" << b.corpus_digest << "`\n";
    os << "- Template version: " << b.template_version << "\n";
    os << "- Evaluated split: " << b.split << "\n";
    os << "- Seeds:";
    for (const auto& [k, v] : b.seeds) os << ' ' << k << '=' << v;
    os << "\n- Bootstrap: " << b.settings.bootstrap_reps << " resamples, " << level_pct
       << "% percentile intervals\n";
    os << "- Chance baseline: " << b.settings.chance_reps << " simulated means of uniform choices (mean 2.5)\n";
    os << "- Backends:";
    for (const auto& m : b.models) os << ' ' << m.model << '=' << m.backend_id;
    os << "\n- Runs: " << b.run_ids.size() << "\n";
    for (const auto& n : b.notices) os << "\n> Note: " << n << '\n';

    os << "\n## Mean appropriateness (bootstrapped " << level_pct << "% CI)\n\n";
    table_header(os);
    table_rows(os, b, [](const ConditionResult& c) {
        if (!c.mean) return std::string("n/a");
        return fixed(c.mean->point) + " [" + fixed(c.mean->ci_low) + ", " + fixed(c.mean->ci_high) + "]";
    });

    os << "\n## Comparison with chance (two-sided p)\n\n";
    table_header(os);
    table_rows(os, b, [&](const ConditionResult& c) { return p_style(c, b.settings.chance_reps); });

    os << "\n## Invalid responses\n\n";
    table_header(os);
    table_rows(os, b, [](const ConditionResult& c) { return std::to_string(c.n_invalid); });

    for (const auto& m : b.models) {
        os << "\n## Pearson correlations: " << m.model << "\n\n";
        if (conditions_present(m).size() < 2) {
            os << "Omitted: fewer than two conditions were run.\n";
            continue;
        }
        os << "| |";
        for (std::size_t j = 1; j < kAllConditions.size(); ++j) os << ' ' << j + 1 << ". |";
        os << "\n|---|";
        for (std::size_t j = 1; j < kAllConditions.size(); ++j) os << "---|";
        os << '\n';
        for (std::size_t i = 0; i < kAllConditions.size(); ++i) {
            os << "| " << i + 1 << ". " << display_name(kAllConditions[i]) << " |";
            for (std::size_t j = 1; j < kAllConditions.size(); ++j) {
                std::string text;
                if (j > i) {
                    const auto* c = find_corr(m, kAllConditions[i], kAllConditions[j]);
                    if (!c) {
                        text = std::string(kAbsent);
                    } else if (!c->r) {
                        text = "n/a";
                    } else {
                        text = r_style(*c->r) + significance_stars(*c->p);
                    }
                }
                os << ' ' << text << " |";
            }
            os << '\n';
        }
        os << "\nAsterisks: * p < .05, ** p < .001.\n";
    }

    os << "\n## Effect of familiarity (proportional odds, Wald 95% CI; approximates credible intervals)\n\n";
    table_header(os);
    table_rows(os, b, [](const ConditionResult& c) {
        if (!c.familiarity) return std::string("n/a");
        const auto& f = *c.familiarity;
        return fixed(f.beta) + " [" + fixed(f.ci_low) + ", " + fixed(f.ci_high) + "]";
    });

    os << "\n## Mean appropriateness gap, " << b.settings.gap_k << " most vs least familiar\n\n";
    table_header(os);
    table_rows(os, b, [](const ConditionResult& c) { return c.gap ? fixed(*c.gap) : std::string("n/a"); });

    os << "\n## Appropriateness histograms\n\n";
    os << "| Model | Condition | 1 | 2 | 3 | 4 | valid | invalid |\n|---|---|---|---|---|---|---|---|\n";
    for (const auto& m : b.models) {
        for (auto c : kAllConditions) {
            const auto* cell = find_cell(m, c);
            if (!cell) continue;
            os << "| " << m.model << " | " << display_name(c) << " |";
            for (auto n : cell->histogram.counts) os << ' ' << n << " |";
            os << ' ' << cell->n_valid << " | " << cell->n_invalid << " |\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------- csv

std::map<std::string, std::string> render_csv(const ReportBundle& b) {
    std::ostringstream means, chance, invalid, corr, fam, gaps, hist;
    means << "model,condition,run_id,n_valid,mean,ci_low,ci_high,level,reps\n";
    chance << "model,condition,observed_mean,n,hits,reps,p\n";
    invalid << "model,condition,n_invalid,n_total\n";
    corr << "model,condition_a,condition_b,r,p,n,stars,note\n";
    fam << "model,condition,beta,se,ci_low,ci_high,converged,note\n";
    gaps << "model,condition,k,gap,note\n";
    hist << "model,condition,score,count\n";
    for (const auto& m : b.models) {
        const auto model = csv::escape(m.model);
        for (const auto& [c, r] : m.conditions) {
            const auto cond = std::string(to_string(c));
            means << model << ',' << cond << ',' << csv::escape(r.run_id) << ',' << r.n_valid << ',';
            if (r.mean) {
                means << fixed(r.mean->point) << ',' << fixed(r.mean->ci_low) << ',' << fixed(r.mean->ci_high)
                      << ',' << fixed(r.mean->level) << ',' << r.mean->reps;
            } else {
                means << ",,,,";
            }
            means << '\n';

            chance << model << ',' << cond << ',' << (r.mean ? fixed(r.mean->point) : "") << ',' << r.n_valid
                   << ',' << (r.chance_hits ? std::to_string(*r.chance_hits) : "") << ','
                   << b.settings.chance_reps << ',' << p_style(r, b.settings.chance_reps) << '\n';

            invalid << model << ',' << cond << ',' << r.n_invalid << ',' << r.n_valid + r.n_invalid << '\n';

            fam << model << ',' << cond << ',';
            if (r.familiarity) {
                const auto& f = *r.familiarity;
                fam << fixed(f.beta) << ',' << fixed(f.se) << ',' << fixed(f.ci_low) << ',' << fixed(f.ci_high)
                    << ',' << (f.converged ? "true" : "false");
            } else {
                fam << ",,,,";
            }
            fam << ',' << csv::escape(r.familiarity_note) << '\n';

            gaps << model << ',' << cond << ',' << b.settings.gap_k << ',' << (r.gap ? fixed(*r.gap) : "") << ','
                 << csv::escape(r.gap_note) << '\n';

            for (std::size_t s = 0; s < 4; ++s) {
                hist << model << ',' << cond << ',' << s + 1 << ',' << r.histogram.counts[s] << '\n';
            }
        }
        for (const auto& c : m.correlations) {
            corr << model << ',' << to_string(c.a) << ',' << to_string(c.b) << ','
                 << (c.r ? fixed(*c.r) : "") << ',' << (c.p ? fixed(*c.p, 4) : "") << ',' << c.n << ','
                 << (c.p ? significance_stars(*c.p) : "") << ',' << csv::escape(c.note) << '\n';
        }
    }
    return {{"means.csv", means.str()},     {"chance.csv", chance.str()},         {"invalid.csv", invalid.str()},
            {"correlations.csv", corr.str()}, {"familiarity.csv", fam.str()},     {"gaps.csv", gaps.str()},
            {"histograms.csv", hist.str()}};
}

ReportFormat parse_report_format(std::string_view s) {
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    throw ValidationError("unknown report format '" + std::string(s) + "'");
}

namespace {

fs::path write_file(const fs::path& path, const std::string& contents) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << contents;
    if (!out) throw Error("write failed for " + path.string());
    return path;
}

} // namespace

std::vector<fs::path> emit(const ReportBundle& bundle, ReportFormat format, const fs::path& dir) {
    std::vector<fs::path> written;
    switch (format) {
    case ReportFormat::markdown: written.push_back(write_file(dir / "report.md", render_markdown(bundle))); break;
    case ReportFormat::json: written.push_back(write_file(dir / "report.json", render_json(bundle))); break;
    case ReportFormat::csv:
        for (const auto& [name, contents] : render_csv(bundle)) {
            written.push_back(write_file(dir / "tables" / name, contents));
        }
        break;
    }
    return written;
}

} // namespace metacot
