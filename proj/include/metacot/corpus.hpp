#pragma once
// Metaphor corpus: loading, validation, filtering, splitting and option
// lettering.
//
// Every item is a copular metaphor ("X is Y" / "Xs are Y") with exactly four
// literal paraphrases whose appropriateness scores form a permutation of
// {1, 2, 3, 4}. Items are immutable once loaded; all operations here are pure
// functions of their inputs and seeds.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace metacot {

enum class Source { literary, nonliterary };

std::string_view to_string(Source s);
Source parse_source(std::string_view s);

struct Paraphrase {
    std::string text;
    int appropriateness = 0; // 1 (worst) .. 4 (best)
};

struct MetaphorItem {
    std::string id;
    std::string sentence;
    std::string subject;
    std::string object;
    Source source = Source::nonliterary;
    std::optional<double> comprehensibility;
    std::optional<double> familiarity;
    std::array<Paraphrase, 4> paraphrases;
    bool excluded = false;
    std::string exclusion_reason;

    // Index of the paraphrase scored 4.
    std::size_t best_index() const;
};

// Splits "[subject] is [object]" / "[subjects] are [object]" on the first
// copula. Trailing sentence punctuation is dropped from the object.
std::optional<std::pair<std::string, std::string>> split_copula(std::string_view sentence);

// Throws ValidationError naming the item id and field on any violation.
void validate_item(const MetaphorItem& item);

class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<MetaphorItem> items);

    const std::vector<MetaphorItem>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    const MetaphorItem* find(std::string_view id) const;
    const MetaphorItem& at(std::string_view id) const;

    // Items not marked excluded, in corpus order.
    std::vector<const MetaphorItem*> included() const;
    std::size_t included_count() const;

    // Canonical content hash over the included items.
    std::string digest() const;

private:
    std::vector<MetaphorItem> items_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(std::string_view s);

Corpus parse_corpus(std::istream& in, CorpusFormat format);
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

// Exclusion list: one "<id><whitespace><reason>" per line, '#' comments.
using ExclusionList = std::map<std::string, std::string, std::less<>>;
ExclusionList parse_exclusions(std::istream& in);
ExclusionList load_exclusions(const std::filesystem::path& path);
// Marks listed items excluded. Unknown ids are a ValidationError.
Corpus apply_exclusions(const Corpus& corpus, const ExclusionList& exclusions);

// Columnar norms keyed by id: header "id,comprehensibility,familiarity"
// (either norm column may be absent or empty).
struct Norms {
    std::optional<double> comprehensibility;
    std::optional<double> familiarity;
};
using NormTable = std::map<std::string, Norms, std::less<>>;
NormTable parse_norms(std::istream& in);
NormTable load_norms(const std::filesystem::path& path);
// Norm values from the table override those stored on the items.
Corpus join_norms(const Corpus& corpus, const NormTable& norms);

// Keeps items whose source is outside `apply_to` unchanged and keeps in-scope
// items only when comprehensibility >= threshold. Excluded items pass through
// untouched.
Corpus filter_comprehensible(const Corpus& corpus, double threshold,
                             Source apply_to = Source::literary);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t dev = 0;
    std::size_t test = 0;
    std::size_t total() const { return train + dev + test; }
};

struct SplitCorpus {
    std::vector<std::string> train;
    std::vector<std::string> dev;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
    SplitSizes sizes;

    const std::vector<std::string>& named(std::string_view split) const;
    bool in_train(std::string_view id) const;
};

// Seeded partition of the included items. Ids in `pinned_train` are placed in
// the training split first; the remainder is shuffled and dealt out.
SplitCorpus split_corpus(const Corpus& corpus, std::uint64_t seed, SplitSizes sizes,
                         const std::vector<std::string>& pinned_train = {});

struct LetterPolicy {
    enum class Kind { as_given, shuffled } kind = Kind::shuffled;
    std::uint64_t seed = 0;

    static LetterPolicy as_given() { return {Kind::as_given, 0}; }
    static LetterPolicy shuffled(std::uint64_t seed) { return {Kind::shuffled, seed}; }
};

// Bijection between option letters a-d and paraphrase indices.
struct LetterAssignment {
    std::string item_id;
    std::array<std::size_t, 4> paraphrase_of{0, 1, 2, 3}; // letter index -> paraphrase index
    std::optional<std::uint64_t> seed;

    std::size_t letter_of(std::size_t paraphrase_index) const;
    const Paraphrase& option(const MetaphorItem& item, char letter) const;
    char best_letter(const MetaphorItem& item) const;
};

inline constexpr std::array<char, 4> kLetters{'a', 'b', 'c', 'd'};

LetterAssignment assign_letters(const MetaphorItem& item, LetterPolicy policy);

} // namespace metacot
