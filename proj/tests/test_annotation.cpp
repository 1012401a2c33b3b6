#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "acsqg/annotation.hpp"
#include "acsqg/errors.hpp"

using namespace acsqg;

namespace {

std::string golden(const std::string& name) {
    std::ifstream in(std::string(ACSQG_DATA_DIR) + "/golden/" + name);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    return line;
}

// hand-built star parse: 1 is root, 0/2/3 attach to it
AnnotatedSentence star4() {
    AnnotatedSentence s;
    s.raw_text = "a b c d";
    for (int i = 0; i < 4; ++i) {
        Token t;
        t.index = i;
        t.text = std::string(1, static_cast<char>('a' + i));
        t.pos = "NOUN";
        t.head_index = 1;
        t.begin_char = 2 * i;
        t.end_char = 2 * i + 1;
        s.tokens.push_back(t);
    }
    s.tokens[1].head_index = 1;
    return s;
}

} // namespace

TEST_CASE("annotate rejects empty input") {
    Annotator ann;
    CHECK_THROWS_AS(ann.annotate(""), InvalidInput);
    CHECK_THROWS_AS(ann.annotate("   \t "), InvalidInput);
}

TEST_CASE("annotate matches frozen golden parses") {
    Annotator ann;
    AnnotatedSentence selina = ann.annotate("Selina left her hometown at the age of 18.");
    CHECK(sentence_to_json(selina) == golden("selina.json"));
    CHECK(selina.tokens.size() == 10);
    CHECK(selina.tokens[static_cast<size_t>(selina.root_index())].text == "left");

    AnnotatedSentence hello = ann.annotate("Hello.");
    CHECK(sentence_to_json(hello) == golden("hello.json"));
    CHECK(hello.tokens.size() == 2);
}

TEST_CASE("fig-1 sentence contains the award chunk") {
    Annotator ann;
    AnnotatedSentence s = ann.annotate(
        "The fight scene finale between Sharon and the character played by Ali Larter, "
        "from the movie Obsessed, won the 2010 MTV Movie Award for Best Fight.");
    CHECK(sentence_to_json(s) == golden("fig1.json"));
    bool found = false;
    for (const Chunk& c : s.chunks)
        if (c.text == "MTV Movie Award for Best Fight") found = true;
    CHECK(found);
}

TEST_CASE("candidate chunks union entity and noun-phrase spans") {
    Annotator ann;
    AnnotatedSentence s = ann.annotate("Ali Larter starred in the movie .");
    bool ent = false, np = false;
    for (const Chunk& c : s.chunks) {
        if (c.text == "Ali Larter") ent = true;
        if (c.text == "the movie") np = true;
    }
    CHECK(ent);
    CHECK(np);
}

TEST_CASE("single-token sentence falls back to a one-token chunk") {
    Annotator ann;
    AnnotatedSentence s = ann.annotate("Run.");
    REQUIRE(!s.chunks.empty());
    CHECK(s.chunks.front().text == "Run");
}

TEST_CASE("chunk invariants hold on varied sentences") {
    Annotator ann;
    const std::vector<std::string> sentences = {
        "Mary built a museum in Paris in 1898 .",
        "The old man and the sea is a short novel .",
        "Did Sharon leave before the ceremony started ?",
        "In March 1920 the committee met in Berlin .",
        "word",
    };
    for (const std::string& text : sentences) {
        AnnotatedSentence s = ann.annotate(text);
        int roots = 0;
        for (size_t i = 0; i < s.tokens.size(); ++i) {
            CHECK(s.tokens[i].index == static_cast<int>(i));
            CHECK(s.tokens[i].head_index >= 0);
            CHECK(s.tokens[i].head_index < static_cast<int>(s.tokens.size()));
            if (s.tokens[i].head_index == s.tokens[i].index) ++roots;
        }
        CHECK(roots == 1);
        std::set<std::pair<int, int>> seen;
        for (const Chunk& c : s.chunks) {
            CHECK(c.start >= 0);
            CHECK(c.start < c.end);
            CHECK(c.end <= static_cast<int>(s.tokens.size()));
            CHECK(c.length() == c.end - c.start);
            CHECK(seen.insert({c.start, c.end}).second); // deduplicated
        }
    }
}

TEST_CASE("dependency distance basics") {
    AnnotatedSentence s = star4();
    CHECK(dependency_distance(s, 2, 2) == 0);
    CHECK(dependency_distance(s, 0, 1) == 1);
    CHECK(dependency_distance(s, 0, 2) == 2); // siblings through shared head
    CHECK(dependency_distance(s, 3, 0) == 2);
    CHECK_THROWS_AS(dependency_distance(s, 0, 4), InvalidInput);
    CHECK_THROWS_AS(dependency_distance(s, -1, 0), InvalidInput);
}

TEST_CASE("dependency distance is a tree metric") {
    // exhaustive over random head assignments on parses up to 8 tokens,
    // validated against an all-pairs Floyd-Warshall oracle
    std::mt19937 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        AnnotatedSentence s;
        s.raw_text = "x";
        for (int i = 0; i < n; ++i) {
            Token t;
            t.index = i;
            t.text = "w";
            t.pos = "NOUN";
            t.head_index = i == 0 ? 0 : static_cast<int>(rng() % static_cast<unsigned>(i));
            s.tokens.push_back(t);
        }
        const int inf = 1000;
        std::vector<std::vector<int>> d(static_cast<size_t>(n),
                                        std::vector<int>(static_cast<size_t>(n), inf));
        for (int i = 0; i < n; ++i) d[static_cast<size_t>(i)][static_cast<size_t>(i)] = 0;
        for (const Token& t : s.tokens)
            if (t.head_index != t.index) {
                d[static_cast<size_t>(t.index)][static_cast<size_t>(t.head_index)] = 1;
                d[static_cast<size_t>(t.head_index)][static_cast<size_t>(t.index)] = 1;
            }
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    d[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                        std::min(d[static_cast<size_t>(i)][static_cast<size_t>(j)],
                                 d[static_cast<size_t>(i)][static_cast<size_t>(k)] +
                                     d[static_cast<size_t>(k)][static_cast<size_t>(j)]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const int got = dependency_distance(s, i, j);
                CHECK(got == d[static_cast<size_t>(i)][static_cast<size_t>(j)]);
                CHECK(got == dependency_distance(s, j, i)); // symmetry
                CHECK((got == 0) == (i == j));
            }
    }
}

TEST_CASE("annotation cache round trips and reuses entries") {
    const std::string path = "/tmp/acsqg_test_cache.jsonl";
    std::remove(path.c_str());
    std::string first;
    {
        Annotator ann(path);
        first = sentence_to_json(ann.annotate("Mary built a museum in Paris ."));
    }
    {
        Annotator ann(path);
        CHECK(sentence_to_json(ann.annotate("Mary built a museum in Paris .")) == first);
    }
    std::remove(path.c_str());
}

TEST_CASE("sentence json round trip") {
    Annotator ann;
    AnnotatedSentence s = ann.annotate("Sarah won 5 awards in Berlin in 1936 .");
    AnnotatedSentence back = sentence_from_json(sentence_to_json(s));
    CHECK(sentence_to_json(back) == sentence_to_json(s));
}

TEST_CASE("sha256 is the standard digest") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
