#include "metacot/parser.hpp"

#include <array>

#include "metacot/error.hpp"
#include "text_util.hpp"

namespace metacot {

namespace {

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

struct Phrase {
    Anchor anchor;
    std::array<std::string_view, 4> words;
    std::size_t count;
};

constexpr std::array<Phrase, 2> kPhrases{{
    {Anchor::answer_is, {"the", "answer", "is", ""}, 3},
    {Anchor::speaker_is_saying, {"the", "speaker", "is", "saying"}, 4},
}};

// Case-insensitive match of `word` at `pos`; returns the position after it.
std::optional<std::size_t> match_word(std::string_view text, std::size_t pos, std::string_view word) {
    if (text.size() - pos < word.size()) return std::nullopt;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (text::ascii_lower(text[pos + i]) != word[i]) return std::nullopt;
    }
    return pos + word.size();
}

std::optional<std::size_t> skip_space(std::string_view text, std::size_t pos) {
    const auto start = pos;
    while (pos < text.size() && text::is_space(text[pos])) ++pos;
    if (pos == start) return std::nullopt;
    return pos;
}

std::optional<AnchorMatch> match_at(std::string_view text, std::size_t start, const Phrase& phrase) {
    std::size_t pos = start;
    for (std::size_t w = 0; w < phrase.count; ++w) {
        auto after = match_word(text, pos, phrase.words[w]);
        if (!after) return std::nullopt;
        auto next = skip_space(text, *after);
        if (!next) return std::nullopt;
        pos = *next;
    }
    if (pos + 1 >= text.size()) return std::nullopt;
    const char letter = text::ascii_lower(text[pos]);
    if (letter < 'a' || letter > 'd' || text[pos + 1] != ')') return std::nullopt;

    AnchorMatch m;
    m.anchor = phrase.anchor;
    m.letter = letter;
    m.offset = start;
    m.span = std::string(text.substr(start, pos + 2 - start));
    auto rest = text.substr(pos + 2);
    rest = rest.substr(0, rest.find('\n'));
    m.trailing = std::string(text::trim(rest));
    return m;
}

} // namespace

std::string_view to_string(Anchor a) {
    switch (a) {
    case Anchor::answer_is: return "answer_is";
    case Anchor::speaker_is_saying: return "speaker_is_saying";
    case Anchor::none: break;
    }
    return "none";
}

Anchor parse_anchor(std::string_view s) {
    if (s == "answer_is") return Anchor::answer_is;
    if (s == "speaker_is_saying") return Anchor::speaker_is_saying;
    if (s == "none") return Anchor::none;
    throw ValidationError("unknown anchor '" + std::string(s) + "'");
}

std::vector<AnchorMatch> find_anchors(std::string_view text) {
    std::vector<AnchorMatch> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text::ascii_lower(text[i]) != 't') continue;
        if (i > 0 && is_word_char(text[i - 1])) continue;
        for (const auto& phrase : kPhrases) {
            if (auto m = match_at(text, i, phrase)) {
                out.push_back(std::move(*m));
                break;
            }
        }
    }
    return out;
}

ParsedAnswer extract_answer(std::string_view completion, std::string item_id) {
    ParsedAnswer out;
    out.item_id = std::move(item_id);
    auto matches = find_anchors(completion);
    if (matches.empty()) return out;
    auto& last = matches.back();
    out.letter = last.letter;
    out.matched_anchor = last.anchor;
    out.raw_span = std::move(last.span);
    out.trailing = std::move(last.trailing);
    return out;
}

ScoredAnswer score_answer(const ParsedAnswer& parsed, const LetterAssignment& letter_map,
                          const MetaphorItem& item) {
    if (letter_map.item_id != item.id) {
        throw ValidationError("letter map for '" + letter_map.item_id + "' applied to item '" + item.id + "'");
    }
    if (!parsed.item_id.empty() && parsed.item_id != item.id) {
        throw ValidationError("parsed answer for '" + parsed.item_id + "' applied to item '" + item.id + "'");
    }
    ScoredAnswer out;
    out.item_id = item.id;
    if (parsed.letter) {
        out.letter = parsed.letter;
        out.appropriateness = letter_map.option(item, *parsed.letter).appropriateness;
    }
    return out;
}

} // namespace metacot
