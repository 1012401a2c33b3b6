#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acsqg/text.hpp"

using namespace acsqg;

TEST_CASE("tokenize splits boundary punctuation") {
    CHECK(text::tokenize("Hello.") == std::vector<std::string>{"Hello", "."});
    CHECK(text::tokenize("Who knows?") == std::vector<std::string>{"Who", "knows", "?"});
    CHECK(text::tokenize("  spaced   out  ") == std::vector<std::string>{"spaced", "out"});
    CHECK(text::tokenize("") == std::vector<std::string>{});
}

TEST_CASE("tokenize keeps contractions attached") {
    auto toks = text::tokenize("don't stop");
    CHECK(toks.front() == "don't");
}

TEST_CASE("lowercase") {
    CHECK(text::lowercase("MTV Movie Award") == "mtv movie award");
}

TEST_CASE("stem maps inflected forms together") {
    CHECK(text::stem("awards") == text::stem("award"));
    CHECK(text::stem("running") == text::stem("runs"));
    CHECK(text::stem("cities") == text::stem("city"));
}

TEST_CASE("stopword list covers function words") {
    CHECK(text::is_stopword("the"));
    CHECK(text::is_stopword("of"));
    CHECK_FALSE(text::is_stopword("museum"));
}

TEST_CASE("answer normalization drops articles and punctuation") {
    CHECK(text::normalize_answer_tokens("The Museum.") == std::vector<std::string>{"museum"});
    CHECK(text::normalize_answer_tokens("an old, red car") ==
          std::vector<std::string>{"old", "red", "car"});
    CHECK(text::normalize_answer_tokens("...") == std::vector<std::string>{});
}

TEST_CASE("metric tokens are lowercased word tokens") {
    CHECK(text::metric_tokens("What Is this?") ==
          std::vector<std::string>{"what", "is", "this", "?"});
}

TEST_CASE("join round trip") {
    CHECK(text::join({"a", "b", "c"}) == "a b c");
    CHECK(text::join({}) == "");
}

TEST_CASE("is_punctuation") {
    CHECK(text::is_punctuation("."));
    CHECK(text::is_punctuation("?"));
    CHECK_FALSE(text::is_punctuation("a"));
    CHECK_FALSE(text::is_punctuation("18"));
}
