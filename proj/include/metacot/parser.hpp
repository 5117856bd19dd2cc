#pragma once
// Multiple-choice answer extraction from completion text.
//
// A completion answers when it contains "the answer is x)" or
// "the speaker is saying x)" with x in a-d. Anchor words match
// case-insensitively with any run of whitespace between them, the anchor must
// start at a word boundary, and when several anchors are present the last one
// wins (rationales put the answer clause at the end).

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metacot/corpus.hpp"

namespace metacot {

enum class Anchor { answer_is, speaker_is_saying, none };

std::string_view to_string(Anchor a);
Anchor parse_anchor(std::string_view s);

struct AnchorMatch {
    Anchor anchor = Anchor::none;
    char letter = 0;         // normalized to lowercase
    std::size_t offset = 0;  // start of the anchor phrase
    std::string span;        // anchor phrase through the right parenthesis
    std::string trailing;    // option text after "x)" up to end of line, trimmed
};

struct ParsedAnswer {
    std::string item_id;
    std::optional<char> letter; // empty means invalid
    Anchor matched_anchor = Anchor::none;
    std::string raw_span;
    std::string trailing;

    bool valid() const { return letter.has_value(); }
};

// Every well-formed anchor match, in order of appearance.
std::vector<AnchorMatch> find_anchors(std::string_view text);

ParsedAnswer extract_answer(std::string_view completion, std::string item_id = {});

struct ScoredAnswer {
    std::string item_id;
    std::optional<char> letter;
    std::optional<int> appropriateness; // empty means excluded from analysis
};

// Throws ValidationError when the letter map belongs to another item.
ScoredAnswer score_answer(const ParsedAnswer& parsed, const LetterAssignment& letter_map,
                          const MetaphorItem& item);

} // namespace metacot
