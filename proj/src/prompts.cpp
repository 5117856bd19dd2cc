#include "metacot/prompts.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "metacot/error.hpp"
#include "metacot/rng.hpp"
#include "text_util.hpp"

namespace metacot {

using nlohmann::json;

std::string_view to_string(Condition c) {
    switch (c) {
    case Condition::options_only: return "options_only";
    case Condition::no_rationale: return "no_rationale";
    case Condition::non_explanation: return "non_explanation";
    case Condition::subject_object: return "subject_object";
    case Condition::qud: return "qud";
    case Condition::similarity: return "similarity";
    }
    return "?";
}

std::string_view display_name(Condition c) {
    switch (c) {
    case Condition::options_only: return "Options Only";
    case Condition::no_rationale: return "No Rationale";
    case Condition::non_explanation: return "Non-Explanation";
    case Condition::subject_object: return "Subject-Object";
    case Condition::qud: return "QUD";
    case Condition::similarity: return "Similarity";
    }
    return "?";
}

Condition parse_condition(std::string_view s) {
    for (auto c : kAllConditions) {
        if (to_string(c) == s) return c;
    }
    throw ValidationError("unknown condition '" + std::string(s) + "'");
}

bool needs_rationale(Condition c) {
    return c == Condition::non_explanation || c == Condition::subject_object || c == Condition::qud ||
           c == Condition::similarity;
}

Anchor answer_anchor(Condition c) {
    switch (c) {
    case Condition::subject_object:
    case Condition::qud:
    case Condition::similarity: return Anchor::speaker_is_saying;
    default: return Anchor::answer_is;
    }
}

RationaleBank parse_rationale_bank(std::istream& in) {
    RationaleBank bank;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto where = "rationale bank line " + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError(where + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("item_id") || !rec["item_id"].is_string() ||
            !rec.contains("condition") || !rec["condition"].is_string() || !rec.contains("body") ||
            !rec["body"].is_string()) {
            throw ValidationError(where + ": expected {item_id, condition, body} strings");
        }
        const auto id = rec["item_id"].get<std::string>();
        const auto cond = parse_condition(rec["condition"].get<std::string>());
        if (!needs_rationale(cond)) {
            throw ValidationError(where + ": condition '" + std::string(to_string(cond)) +
                                  "' takes no rationale body");
        }
        auto& record = bank[id];
        record.item_id = id;
        if (!record.rationale.emplace(cond, rec["body"].get<std::string>()).second) {
            throw ValidationError(where + ": duplicate body for " + id + "/" + std::string(to_string(cond)));
        }
    }
    return bank;
}

namespace {

void check_body(const MetaphorItem& item, Condition cond, const std::string& body,
                const LetterAssignment& letter_map) {
    const auto where = "example '" + item.id + "' condition " + std::string(to_string(cond));
    if (text::trim(body).empty()) throw ValidationError(where + ": empty rationale body");
    const auto anchors = find_anchors(body);
    if (anchors.empty()) throw ValidationError(where + ": no answer clause");
    if (anchors.size() > 1) throw ValidationError(where + ": more than one answer clause");
    const auto& m = anchors.front();
    if (m.anchor != answer_anchor(cond)) {
        throw ValidationError(where + ": answer clause uses '" + std::string(to_string(m.anchor)) +
                              "', expected '" + std::string(to_string(answer_anchor(cond))) + "'");
    }
    const char expected = letter_map.best_letter(item);
    if (m.letter != expected) {
        throw ValidationError(where + ": rationale answers " + std::string(1, m.letter) +
                              ") but the best paraphrase is " + std::string(1, expected) + ")");
    }
}

} // namespace

void validate_rationale_bank(const RationaleBank& bank, const Corpus& corpus) {
    for (const auto& [id, record] : bank) {
        const auto* item = corpus.find(id);
        if (!item) throw ValidationError("rationale bank references unknown item '" + id + "'");
        const auto letters = assign_letters(*item, LetterPolicy::as_given());
        for (auto cond : kAllConditions) {
            if (!needs_rationale(cond)) continue;
            auto it = record.rationale.find(cond);
            if (it == record.rationale.end()) {
                throw ValidationError("example '" + id + "': missing " + std::string(to_string(cond)) + " body");
            }
            check_body(*item, cond, it->second, letters);
        }
    }
}

RationaleBank load_rationale_bank(const std::filesystem::path& path, const Corpus& corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open rationale bank '" + path.string() + "'");
    auto bank = parse_rationale_bank(in);
    validate_rationale_bank(bank, corpus);
    return bank;
}

std::string render_answer_paragraph(const MetaphorItem& item, const ExampleRecord& example,
                                    Condition condition, const LetterAssignment& letter_map) {
    if (letter_map.item_id != item.id || example.item_id != item.id) {
        throw ValidationError("example '" + example.item_id + "' rendered with mismatched item or letter map");
    }
    if (!needs_rationale(condition)) {
        const char letter = letter_map.best_letter(item);
        return "The answer is " + std::string(1, letter) + ") " + item.paraphrases[item.best_index()].text;
    }
    auto it = example.rationale.find(condition);
    if (it == example.rationale.end()) {
        throw ValidationError("example '" + item.id + "': missing " + std::string(to_string(condition)) + " body");
    }
    check_body(item, condition, it->second, letter_map);
    return it->second;
}

namespace {

void append_options(std::string& out, const MetaphorItem& item, const LetterAssignment& letter_map) {
    for (std::size_t l = 0; l < 4; ++l) {
        out += kLetters[l];
        out += ") ";
        out += item.paraphrases[letter_map.paraphrase_of[l]].text;
        out += '\n';
    }
}

void append_sentence(std::string& out, const MetaphorItem& item) {
    out += '"';
    out += item.sentence;
    out += "\"\n";
}

} // namespace

std::string render_example(const MetaphorItem& item, const ExampleRecord& example, Condition condition,
                           const LetterAssignment& letter_map) {
    std::string out;
    if (condition != Condition::options_only) append_sentence(out, item);
    append_options(out, item, letter_map);
    out += render_answer_paragraph(item, example, condition, letter_map);
    out += '\n';
    return out;
}

PromptBuilder::PromptBuilder(const Corpus& corpus, const RationaleBank& bank, const SplitCorpus& split,
                             const std::vector<std::string>& example_ids, std::uint64_t order_seed)
    : corpus_(&corpus), bank_(&bank), order_(example_ids) {
    if (example_ids.size() != kExampleCount) {
        throw ValidationError("prompts need exactly " + std::to_string(kExampleCount) + " examples, got " +
                              std::to_string(example_ids.size()));
    }
    std::set<std::string, std::less<>> seen;
    for (const auto& id : example_ids) {
        if (!seen.insert(id).second) throw ValidationError("example '" + id + "' listed twice");
        if (!corpus.find(id)) throw ValidationError("example '" + id + "' is not in the corpus");
        if (!split.in_train(id)) {
            throw ValidationError("example '" + id + "' is not in the training split (leakage guard)");
        }
        if (!bank.contains(id)) throw ValidationError("example '" + id + "' has no rationale bank entry");
    }
    rng::Engine eng(rng::derive(order_seed, std::string_view("example-order")));
    rng::shuffle(std::span<std::string>(order_), eng);
}

RenderedPrompt PromptBuilder::render(Condition condition, const MetaphorItem& target,
                                     const LetterAssignment& target_letter_map) const {
    if (target_letter_map.item_id != target.id) {
        throw ValidationError("letter map for '" + target_letter_map.item_id + "' used for target '" +
                              target.id + "'");
    }
    RenderedPrompt out;
    out.condition = condition;
    out.target_item_id = target.id;
    out.letter_map = target_letter_map;
    out.example_ids = order_;

    std::string& text = out.text;
    text += kInstruction;
    text += "\n\n";
    for (const auto& id : order_) {
        const auto& item = corpus_->at(id);
        const auto& example = bank_->find(id)->second;
        text += render_example(item, example, condition, assign_letters(item, LetterPolicy::as_given()));
        text += '\n';
    }
    if (condition != Condition::options_only) append_sentence(text, target);
    append_options(text, target, target_letter_map);
    return out;
}

RenderedPrompt render_prompt(Condition condition, const Corpus& corpus, const RationaleBank& bank,
                             const SplitCorpus& split, const std::vector<std::string>& example_ids,
                             std::uint64_t order_seed, const MetaphorItem& target,
                             const LetterAssignment& target_letter_map) {
    return PromptBuilder(corpus, bank, split, example_ids, order_seed)
        .render(condition, target, target_letter_map);
}

} // namespace metacot
