#pragma once
// Few-shot prompt rendering for the six prompt conditions.
//
// Layout (template metacot-v1):
//
//   Choose the most appropriate paraphrase of the first sentence.
//   <blank>
//   "<example metaphor>"          (omitted for options_only)
//   a) ...
//   b) ...
//   c) ...
//   d) ...
//   <answer paragraph>
//   <blank>
//   ... nine more examples ...
//   <blank>
//   "<target metaphor>"           (omitted for options_only)
//   a) ... d) ...                 (text ends after the d) line)
//
// Rationale-bearing conditions end their paragraph with
// "so the speaker is saying x) ..."; the others end with
// "The answer is x) ...".

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "metacot/corpus.hpp"
#include "metacot/parser.hpp"

namespace metacot {

enum class Condition { options_only, no_rationale, non_explanation, subject_object, qud, similarity };

inline constexpr std::array<Condition, 6> kAllConditions{
    Condition::options_only,   Condition::no_rationale, Condition::non_explanation,
    Condition::subject_object, Condition::qud,          Condition::similarity,
};

inline constexpr std::string_view kInstruction = "Choose the most appropriate paraphrase of the first sentence.";
inline constexpr std::string_view kTemplateVersion = "metacot-v1";
inline constexpr std::size_t kExampleCount = 10;

std::string_view to_string(Condition c);
// Column heading used in reports ("Options Only", "QUD", ...).
std::string_view display_name(Condition c);
Condition parse_condition(std::string_view s);

// True for conditions whose example paragraphs come from the rationale bank.
bool needs_rationale(Condition c);
// The anchor phrase that closes an example paragraph under this condition.
Anchor answer_anchor(Condition c);

struct ExampleRecord {
    std::string item_id;
    std::map<Condition, std::string> rationale;
};

using RationaleBank = std::map<std::string, ExampleRecord, std::less<>>;

// Bank file: one JSON object per line, {"item_id", "condition", "body"}.
RationaleBank parse_rationale_bank(std::istream& in);
// Checks every body against the corpus: the item exists, all four
// rationale conditions are present, and each body closes with exactly one
// answer clause naming the best option under the as_given letter map.
void validate_rationale_bank(const RationaleBank& bank, const Corpus& corpus);
RationaleBank load_rationale_bank(const std::filesystem::path& path, const Corpus& corpus);

// The paragraph following an example's options.
std::string render_answer_paragraph(const MetaphorItem& item, const ExampleRecord& example,
                                    Condition condition, const LetterAssignment& letter_map);

std::string render_example(const MetaphorItem& item, const ExampleRecord& example, Condition condition,
                           const LetterAssignment& letter_map);

struct RenderedPrompt {
    Condition condition = Condition::no_rationale;
    std::string target_item_id;
    std::string text;
    LetterAssignment letter_map;
    std::vector<std::string> example_ids;
    std::string template_version{kTemplateVersion};
};

// Holds the ten validated examples in run order. Construction enforces the
// example count and the leakage guard (every example from the training split).
class PromptBuilder {
public:
    PromptBuilder(const Corpus& corpus, const RationaleBank& bank, const SplitCorpus& split,
                  const std::vector<std::string>& example_ids, std::uint64_t order_seed);

    RenderedPrompt render(Condition condition, const MetaphorItem& target,
                          const LetterAssignment& target_letter_map) const;

    // Example ids in presentation order.
    const std::vector<std::string>& example_order() const { return order_; }

private:
    const Corpus* corpus_;
    const RationaleBank* bank_;
    std::vector<std::string> order_;
};

RenderedPrompt render_prompt(Condition condition, const Corpus& corpus, const RationaleBank& bank,
                             const SplitCorpus& split, const std::vector<std::string>& example_ids,
                             std::uint64_t order_seed, const MetaphorItem& target,
                             const LetterAssignment& target_letter_map);

} // namespace metacot
