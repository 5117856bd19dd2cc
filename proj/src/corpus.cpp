#include "metacot/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "metacot/digest.hpp"
#include "metacot/error.hpp"
#include "metacot/rng.hpp"
#include "text_util.hpp"

namespace metacot {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::string_view id, std::string_view field, std::string_view what) {
    std::ostringstream os;
    os << "item '" << id << "': field '" << field << "': " << what;
    throw ValidationError(os.str());
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return in;
}

std::optional<double> optional_number(const json& rec, const char* key, std::string_view id) {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) fail(id, key, "expected a number");
    return it->get<double>();
}

std::string required_string(const json& rec, const char* key, std::string_view id) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string()) fail(id, key, "missing or not a string");
    return it->get<std::string>();
}

MetaphorItem item_from_json(const json& rec, std::size_t line_no) {
    if (!rec.is_object()) {
        throw ValidationError("line " + std::to_string(line_no) + ": record is not an object");
    }
    MetaphorItem item;
    auto id_it = rec.find("id");
    if (id_it == rec.end() || !id_it->is_string() || id_it->get<std::string>().empty()) {
        throw ValidationError("line " + std::to_string(line_no) + ": field 'id' missing");
    }
    item.id = id_it->get<std::string>();
    item.sentence = required_string(rec, "sentence", item.id);
    if (auto it = rec.find("subject"); it != rec.end() && it->is_string()) item.subject = *it;
    if (auto it = rec.find("object"); it != rec.end() && it->is_string()) item.object = *it;
    try {
        item.source = parse_source(required_string(rec, "source", item.id));
    } catch (const ValidationError&) {
        fail(item.id, "source", "expected 'literary' or 'nonliterary'");
    }
    item.comprehensibility = optional_number(rec, "comprehensibility", item.id);
    item.familiarity = optional_number(rec, "familiarity", item.id);

    auto ps = rec.find("paraphrases");
    if (ps == rec.end() || !ps->is_array()) fail(item.id, "paraphrases", "missing or not an array");
    if (ps->size() != 4) {
        fail(item.id, "paraphrases", "expected 4 entries, got " + std::to_string(ps->size()));
    }
    for (std::size_t i = 0; i < 4; ++i) {
        const json& p = (*ps)[i];
        if (!p.is_object() || !p.contains("text") || !p["text"].is_string() ||
            !p.contains("appropriateness") || !p["appropriateness"].is_number_integer()) {
            fail(item.id, "paraphrases[" + std::to_string(i) + "]",
                 "expected {text: string, appropriateness: integer}");
        }
        item.paraphrases[i].text = p["text"].get<std::string>();
        item.paraphrases[i].appropriateness = p["appropriateness"].get<int>();
    }
    if (auto it = rec.find("excluded"); it != rec.end() && it->is_boolean()) item.excluded = *it;
    if (auto it = rec.find("exclusion_reason"); it != rec.end() && it->is_string()) {
        item.exclusion_reason = *it;
    }
    return item;
}

std::optional<double> parse_optional_double(std::string_view cell, std::string_view id,
                                            std::string_view field) {
    const auto s = text::trim(cell);
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        double v = std::stod(std::string(s), &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(id, field, "not a number: '" + std::string(s) + "'");
    }
}

Corpus parse_csv_corpus(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) return Corpus{};
    std::map<std::string, std::size_t, std::less<>> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(text::trim(header[i]))] = i;
    auto need = [&](std::string_view name) {
        auto it = col.find(name);
        if (it == col.end()) throw ValidationError("csv corpus: missing column '" + std::string(name) + "'");
        return it->second;
    };
    const auto c_id = need("id");
    const auto c_sentence = need("sentence");
    const auto c_source = need("source");
    std::array<std::size_t, 4> c_text{}, c_score{};
    for (std::size_t k = 0; k < 4; ++k) {
        c_text[k] = need("p" + std::to_string(k + 1) + "_text");
        c_score[k] = need("p" + std::to_string(k + 1) + "_appropriateness");
    }
    auto opt_col = [&](std::string_view name) -> std::optional<std::size_t> {
        auto it = col.find(name);
        if (it == col.end()) return std::nullopt;
        return it->second;
    };
    const auto c_subject = opt_col("subject");
    const auto c_object = opt_col("object");
    const auto c_comp = opt_col("comprehensibility");
    const auto c_fam = opt_col("familiarity");

    std::vector<MetaphorItem> items;
    std::vector<std::string> row;
    std::size_t line = 1;
    while (reader.next(row)) {
        ++line;
        if (row.size() == 1 && text::trim(row[0]).empty()) continue;
        if (row.size() != header.size()) {
            throw ValidationError("csv corpus line " + std::to_string(line) + ": expected " +
                                  std::to_string(header.size()) + " cells, got " +
                                  std::to_string(row.size()));
        }
        MetaphorItem item;
        item.id = std::string(text::trim(row[c_id]));
        if (item.id.empty()) throw ValidationError("csv corpus line " + std::to_string(line) + ": empty id");
        item.sentence = row[c_sentence];
        if (c_subject) item.subject = row[*c_subject];
        if (c_object) item.object = row[*c_object];
        try {
            item.source = parse_source(text::trim(row[c_source]));
        } catch (const ValidationError&) {
            fail(item.id, "source", "expected 'literary' or 'nonliterary'");
        }
        if (c_comp) item.comprehensibility = parse_optional_double(row[*c_comp], item.id, "comprehensibility");
        if (c_fam) item.familiarity = parse_optional_double(row[*c_fam], item.id, "familiarity");
        for (std::size_t k = 0; k < 4; ++k) {
            item.paraphrases[k].text = row[c_text[k]];
            const auto field = "p" + std::to_string(k + 1) + "_appropriateness";
            auto v = parse_optional_double(row[c_score[k]], item.id, field);
            if (!v || *v != static_cast<int>(*v)) fail(item.id, field, "expected an integer");
            item.paraphrases[k].appropriateness = static_cast<int>(*v);
        }
        items.push_back(std::move(item));
    }
    return Corpus(std::move(items));
}

} // namespace

std::string_view to_string(Source s) {
    return s == Source::literary ? "literary" : "nonliterary";
}

Source parse_source(std::string_view s) {
    if (s == "literary") return Source::literary;
    if (s == "nonliterary" || s == "non-literary" || s == "non_literary") return Source::nonliterary;
    throw ValidationError("unknown source '" + std::string(s) + "'");
}

std::size_t MetaphorItem::best_index() const {
    for (std::size_t i = 0; i < paraphrases.size(); ++i) {
        if (paraphrases[i].appropriateness == 4) return i;
    }
    throw ValidationError("item '" + id + "': no paraphrase scored 4");
}

std::optional<std::pair<std::string, std::string>> split_copula(std::string_view sentence) {
    auto s = text::trim(sentence);
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.remove_suffix(1);
    const auto lower = text::to_lower(s);
    std::size_t best = std::string::npos;
    std::size_t len = 0;
    for (std::string_view cop : {" is ", " are "}) {
        auto pos = lower.find(cop);
        if (pos != std::string::npos && pos < best) {
            best = pos;
            len = cop.size();
        }
    }
    if (best == std::string::npos) return std::nullopt;
    auto subj = text::trim(s.substr(0, best));
    auto obj = text::trim(s.substr(best + len));
    if (subj.empty() || obj.empty()) return std::nullopt;
    return std::make_pair(std::string(subj), std::string(obj));
}

void validate_item(const MetaphorItem& item) {
    if (item.id.empty()) throw ValidationError("item with empty id");
    if (text::trim(item.sentence).empty()) fail(item.id, "sentence", "empty");
    if (item.subject.empty()) fail(item.id, "subject", "empty");
    if (item.object.empty()) fail(item.id, "object", "empty");
    const auto lower = text::to_lower(item.sentence);
    if (lower.find(text::to_lower(item.subject)) == std::string::npos) {
        fail(item.id, "subject", "'" + item.subject + "' does not occur in the sentence");
    }
    if (lower.find(text::to_lower(item.object)) == std::string::npos) {
        fail(item.id, "object", "'" + item.object + "' does not occur in the sentence");
    }
    std::array<int, 4> seen{};
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& p = item.paraphrases[i];
        if (text::trim(p.text).empty()) fail(item.id, "paraphrases[" + std::to_string(i) + "].text", "empty");
        if (p.appropriateness < 1 || p.appropriateness > 4) {
            fail(item.id, "paraphrases[" + std::to_string(i) + "].appropriateness",
                 "must be in 1..4, got " + std::to_string(p.appropriateness));
        }
        ++seen[static_cast<std::size_t>(p.appropriateness - 1)];
    }
    if (seen != std::array<int, 4>{1, 1, 1, 1}) {
        fail(item.id, "paraphrases", "appropriateness not a permutation of 1..4");
    }
    if (item.comprehensibility && !std::isfinite(*item.comprehensibility)) {
        fail(item.id, "comprehensibility", "not finite");
    }
    if (item.familiarity && !std::isfinite(*item.familiarity)) fail(item.id, "familiarity", "not finite");
}

Corpus::Corpus(std::vector<MetaphorItem> items) : items_(std::move(items)) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        auto& item = items_[i];
        if (item.subject.empty() || item.object.empty()) {
            if (auto parts = split_copula(item.sentence)) {
                if (item.subject.empty()) item.subject = parts->first;
                if (item.object.empty()) item.object = parts->second;
            }
        }
        validate_item(item);
        if (!index_.emplace(item.id, i).second) {
            throw ValidationError("duplicate item id '" + item.id + "'");
        }
    }
}

const MetaphorItem* Corpus::find(std::string_view id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &items_[it->second];
}

const MetaphorItem& Corpus::at(std::string_view id) const {
    if (const auto* item = find(id)) return *item;
    throw ValidationError("unknown item id '" + std::string(id) + "'");
}

std::vector<const MetaphorItem*> Corpus::included() const {
    std::vector<const MetaphorItem*> out;
    for (const auto& item : items_) {
        if (!item.excluded) out.push_back(&item);
    }
    return out;
}

std::size_t Corpus::included_count() const {
    return static_cast<std::size_t>(
        std::count_if(items_.begin(), items_.end(), [](const auto& i) { return !i.excluded; }));
}

std::string Corpus::digest() const {
    std::string canon;
    for (const auto* item : included()) {
        json rec = {{"id", item->id},
                    {"sentence", item->sentence},
                    {"subject", item->subject},
                    {"object", item->object},
                    {"source", to_string(item->source)}};
        rec["comprehensibility"] = item->comprehensibility ? json(*item->comprehensibility) : json();
        rec["familiarity"] = item->familiarity ? json(*item->familiarity) : json();
        json ps = json::array();
        for (const auto& p : item->paraphrases) {
            ps.push_back({{"text", p.text}, {"appropriateness", p.appropriateness}});
        }
        rec["paraphrases"] = std::move(ps);
        canon += rec.dump();
        canon += '\n';
    }
    return sha256_hex(canon);
}

CorpusFormat parse_corpus_format(std::string_view s) {
    if (s == "jsonl") return CorpusFormat::jsonl;
    if (s == "csv") return CorpusFormat::csv;
    throw ValidationError("unknown corpus format '" + std::string(s) + "'");
}

Corpus parse_corpus(std::istream& in, CorpusFormat format) {
    if (format == CorpusFormat::csv) return parse_csv_corpus(in);
    std::vector<MetaphorItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
        items.push_back(item_from_json(rec, line_no));
    }
    return Corpus(std::move(items));
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    auto in = open_input(path);
    return parse_corpus(in, format);
}

ExclusionList parse_exclusions(std::istream& in) {
    ExclusionList out;
    std::string line;
    while (std::getline(in, line)) {
        auto s = text::trim(line);
        if (s.empty() || s.front() == '#') continue;
        auto ws = s.find_first_of(" \t");
        std::string id(s.substr(0, ws));
        std::string reason = ws == std::string_view::npos ? "" : std::string(text::trim(s.substr(ws)));
        out[id] = reason;
    }
    return out;
}

ExclusionList load_exclusions(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_exclusions(in);
}

Corpus apply_exclusions(const Corpus& corpus, const ExclusionList& exclusions) {
    for (const auto& [id, reason] : exclusions) {
        if (!corpus.find(id)) throw ValidationError("exclusion list names unknown item '" + id + "'");
    }
    auto items = corpus.items();
    for (auto& item : items) {
        if (auto it = exclusions.find(item.id); it != exclusions.end()) {
            item.excluded = true;
            item.exclusion_reason = it->second;
        }
    }
    return Corpus(std::move(items));
}

NormTable parse_norms(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> header;
    NormTable out;
    if (!reader.next(header)) return out;
    std::optional<std::size_t> c_id, c_comp, c_fam;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto h = text::trim(header[i]);
        if (h == "id") c_id = i;
        if (h == "comprehensibility") c_comp = i;
        if (h == "familiarity") c_fam = i;
    }
    if (!c_id) throw ValidationError("norms file: missing 'id' column");
    std::vector<std::string> row;
    while (reader.next(row)) {
        if (row.size() == 1 && text::trim(row[0]).empty()) continue;
        if (row.size() != header.size()) throw ValidationError("norms file: ragged row");
        std::string id(text::trim(row[*c_id]));
        Norms n;
        if (c_comp) n.comprehensibility = parse_optional_double(row[*c_comp], id, "comprehensibility");
        if (c_fam) n.familiarity = parse_optional_double(row[*c_fam], id, "familiarity");
        out[id] = n;
    }
    return out;
}

NormTable load_norms(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_norms(in);
}

Corpus join_norms(const Corpus& corpus, const NormTable& norms) {
    auto items = corpus.items();
    for (auto& item : items) {
        auto it = norms.find(item.id);
        if (it == norms.end()) continue;
        if (it->second.comprehensibility) item.comprehensibility = it->second.comprehensibility;
        if (it->second.familiarity) item.familiarity = it->second.familiarity;
    }
    return Corpus(std::move(items));
}

Corpus filter_comprehensible(const Corpus& corpus, double threshold, Source apply_to) {
    std::vector<MetaphorItem> kept;
    for (const auto& item : corpus.items()) {
        if (item.excluded || item.source != apply_to) {
            kept.push_back(item);
            continue;
        }
        if (!item.comprehensibility) fail(item.id, "comprehensibility", "missing norm");
        if (*item.comprehensibility >= threshold) kept.push_back(item);
    }
    return Corpus(std::move(kept));
}

const std::vector<std::string>& SplitCorpus::named(std::string_view split) const {
    if (split == "train") return train;
    if (split == "dev") return dev;
    if (split == "test") return test;
    throw ValidationError("unknown split '" + std::string(split) + "'");
}

bool SplitCorpus::in_train(std::string_view id) const {
    return std::find(train.begin(), train.end(), id) != train.end();
}

SplitCorpus split_corpus(const Corpus& corpus, std::uint64_t seed, SplitSizes sizes,
                         const std::vector<std::string>& pinned_train) {
    const auto included = corpus.included();
    if (sizes.total() != included.size()) {
        throw ValidationError("split sizes " + std::to_string(sizes.train) + "+" +
                              std::to_string(sizes.dev) + "+" + std::to_string(sizes.test) +
                              " do not sum to corpus size " + std::to_string(included.size()));
    }
    if (pinned_train.size() > sizes.train) {
        throw ValidationError("more pinned training items than training slots");
    }
    std::set<std::string, std::less<>> pinned;
    for (const auto& id : pinned_train) {
        const auto* item = corpus.find(id);
        if (!item || item->excluded) throw ValidationError("pinned item '" + id + "' is not in the corpus");
        if (!pinned.insert(id).second) throw ValidationError("pinned item '" + id + "' listed twice");
    }

    std::vector<std::string> pool;
    for (const auto* item : included) {
        if (!pinned.contains(item->id)) pool.push_back(item->id);
    }
    rng::Engine eng(rng::derive(seed, std::uint64_t{0}));
    rng::shuffle(std::span<std::string>(pool), eng);

    SplitCorpus out;
    out.seed = seed;
    out.sizes = sizes;
    out.train = pinned_train;
    auto it = pool.begin();
    const auto fill = [&](std::vector<std::string>& dst, std::size_t n) {
        while (dst.size() < n) dst.push_back(*it++);
    };
    fill(out.train, sizes.train);
    fill(out.dev, sizes.dev);
    fill(out.test, sizes.test);
    return out;
}

std::size_t LetterAssignment::letter_of(std::size_t paraphrase_index) const {
    for (std::size_t l = 0; l < 4; ++l) {
        if (paraphrase_of[l] == paraphrase_index) return l;
    }
    throw ValidationError("item '" + item_id + "': letter map is not a bijection");
}

const Paraphrase& LetterAssignment::option(const MetaphorItem& item, char letter) const {
    const auto l = static_cast<std::size_t>(std::tolower(static_cast<unsigned char>(letter)) - 'a');
    if (l >= 4) throw ValidationError(std::string("letter out of range: ") + letter);
    return item.paraphrases[paraphrase_of[l]];
}

char LetterAssignment::best_letter(const MetaphorItem& item) const {
    return kLetters[letter_of(item.best_index())];
}

LetterAssignment assign_letters(const MetaphorItem& item, LetterPolicy policy) {
    LetterAssignment out;
    out.item_id = item.id;
    if (policy.kind == LetterPolicy::Kind::shuffled) {
        out.seed = policy.seed;
        rng::Engine eng(rng::derive(policy.seed, item.id));
        rng::shuffle(std::span<std::size_t>(out.paraphrase_of), eng);
    }
    return out;
}

} // namespace metacot
