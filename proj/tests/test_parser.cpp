#include <gtest/gtest.h>

#include <cctype>
#include <random>
#include <regex>

#include "metacot/error.hpp"
#include "metacot/parser.hpp"
#include "support.hpp"

using namespace metacot;

namespace {

// Independent reference: the two anchor phrases as an anchored regular
// expression tried at every position where "the" does not continue a word.
// Words are separated by runs of ASCII whitespace and the letter is followed
// directly by ')'.
const std::regex& anchor_regex() {
    static const std::regex re(
        R"((the[ \t\n\r\f\v]+answer[ \t\n\r\f\v]+is|the[ \t\n\r\f\v]+speaker[ \t\n\r\f\v]+is[ \t\n\r\f\v]+saying)[ \t\n\r\f\v]+([a-dA-D])\))",
        std::regex::icase | std::regex::ECMAScript);
    return re;
}

std::optional<char> oracle_last_letter(const std::string& text) {
    std::optional<char> last;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_')) continue;
        std::smatch m;
        if (std::regex_search(text.cbegin() + static_cast<std::ptrdiff_t>(i), text.cend(), m, anchor_regex(),
                              std::regex_constants::match_continuous)) {
            last = static_cast<char>(std::tolower(static_cast<unsigned char>(m.str(2)[0])));
        }
    }
    return last;
}

} // namespace

TEST(Parser, ErrorAnalysisCompletions) {
    const auto memories = extract_answer(
        "The speaker is addressing the question \"How do memories affect the mind?\" The speaker answers this "
        "question by comparing memories to roots. Roots hold the soil in place, so the speaker is saying b) "
        "Memories are long.");
    ASSERT_TRUE(memories.valid());
    EXPECT_EQ(*memories.letter, 'b');
    EXPECT_EQ(memories.matched_anchor, Anchor::speaker_is_saying);
    EXPECT_EQ(memories.trailing, "Memories are long.");

    const auto love = extract_answer(
        "The speaker is addressing the question \"How does love feel?\" The speaker answers this question by "
        "comparing love to a flower. A flower is beautiful, so the speaker is saying c) Love is an emotion.");
    ASSERT_TRUE(love.valid());
    EXPECT_EQ(*love.letter, 'c');
}

TEST(Parser, InvalidCases) {
    const auto none = extract_answer("I think both options are plausible.");
    EXPECT_FALSE(none.valid());
    EXPECT_EQ(none.matched_anchor, Anchor::none);
    EXPECT_FALSE(extract_answer("the answer is e)").valid());
    EXPECT_FALSE(extract_answer("option B is best").valid());
    EXPECT_FALSE(extract_answer("the answer is b").valid());
    EXPECT_FALSE(extract_answer("the answer isb)").valid());
    EXPECT_FALSE(extract_answer("bathe answer is b)").valid());
    EXPECT_FALSE(extract_answer("").valid());
}

TEST(Parser, CaseAndWhitespaceTolerance) {
    const auto p = extract_answer("THE   Answer\n\tIS  B) A bagpipe is loud.");
    ASSERT_TRUE(p.valid());
    EXPECT_EQ(*p.letter, 'b');
    EXPECT_EQ(p.matched_anchor, Anchor::answer_is);
    EXPECT_EQ(p.raw_span, "THE   Answer\n\tIS  B)");
}

TEST(Parser, LastMatchWins) {
    const auto p = extract_answer("The answer is a) x. Actually, so the speaker is saying d) y.");
    EXPECT_EQ(*p.letter, 'd');
    EXPECT_EQ(p.matched_anchor, Anchor::speaker_is_saying);
    const auto q = extract_answer("so the speaker is saying d) y. Finally the answer is c)");
    EXPECT_EQ(*q.letter, 'c');
    EXPECT_EQ(q.matched_anchor, Anchor::answer_is);
}

TEST(Parser, Scoring) {
    const auto item = testsupport::bagpipe();
    const auto lm = assign_letters(item, LetterPolicy::as_given());
    EXPECT_EQ(*score_answer(extract_answer("The answer is a)"), lm, item).appropriateness, 4);
    EXPECT_EQ(*score_answer(extract_answer("The answer is d)"), lm, item).appropriateness, 1);
    const auto invalid = score_answer(extract_answer("no idea"), lm, item);
    EXPECT_FALSE(invalid.letter);
    EXPECT_FALSE(invalid.appropriateness);

    auto other = lm;
    other.item_id = "other";
    EXPECT_THROW(score_answer(extract_answer("The answer is a)"), other, item), ValidationError);
    EXPECT_THROW(score_answer(extract_answer("The answer is a)", "zzz"), lm, item), ValidationError);
}

TEST(Parser, FuzzAgainstRegexOracle) {
    std::mt19937_64 eng(99);
    const std::vector<std::string> pieces{"the", "The", "answer", "speaker", "is", "saying", " ", "  ", "\n",
                                          "a)", "B)", "e)", "c", ")", "x", "THE ANSWER IS ", "the speaker is saying "};
    for (int i = 0; i < 5000; ++i) {
        std::string s;
        const auto n = eng() % 12;
        for (std::size_t k = 0; k < n; ++k) {
            if (eng() % 3 == 0) {
                s += static_cast<char>(eng() % 256);
            } else {
                s += pieces[eng() % pieces.size()];
            }
        }
        std::optional<ParsedAnswer> parsed;
        ASSERT_NO_THROW(parsed = extract_answer(s));
        EXPECT_EQ(parsed->letter, oracle_last_letter(s)) << '[' << s << ']';
        EXPECT_EQ(parsed->valid(), parsed->matched_anchor != Anchor::none);
    }
}

TEST(Parser, RandomBytesNeverThrow) {
    std::mt19937_64 eng(7);
    for (int i = 0; i < 10000; ++i) {
        std::string s(eng() % 200, '\0');
        for (auto& c : s) c = static_cast<char>(eng() % 256);
        ParsedAnswer p;
        ASSERT_NO_THROW(p = extract_answer(s));
        EXPECT_EQ(p.valid(), oracle_last_letter(s).has_value());
    }
}
