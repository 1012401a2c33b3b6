#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "acsqg/annotation.hpp"
#include "acsqg/errors.hpp"
#include "acsqg/sampler.hpp"

using namespace acsqg;

namespace {

const std::string kData = ACSQG_DATA_DIR;

// two tokens, two single-token chunks with distinct (pos, ner) keys
AnnotatedSentence two_chunk_sentence() {
    AnnotatedSentence s;
    s.raw_text = "alpha beta";
    for (int i = 0; i < 2; ++i) {
        Token t;
        t.index = i;
        t.text = i == 0 ? "alpha" : "beta";
        t.pos = i == 0 ? "NOUN" : "VERB";
        t.head_index = 0;
        t.begin_char = 6 * i;
        t.end_char = 6 * i + 5;
        s.tokens.push_back(t);
    }
    Chunk a{0, 1, "alpha", "NOUN", "UNK"};
    Chunk b{1, 2, "beta", "VERB", "UNK"};
    s.chunks = {a, b};
    return s;
}

std::vector<TrainingRecord> fixture_records() {
    Annotator ann;
    RelatedWordsDict dict =
        build_related_words(kData + "/vectors.txt", kData + "/synonyms.txt", 5);
    return build_training_records(load_squad(kData + "/corpus_tiny.json"), dict, ann);
}

} // namespace

TEST_CASE("bin_of partitions [0, max) evenly and clamps") {
    BinSpec bins{30, 10};
    CHECK(bins.bin_of(0) == 0);
    CHECK(bins.bin_of(2.9) == 0);
    CHECK(bins.bin_of(3) == 1);
    CHECK(bins.bin_of(29.9) == 9);
    CHECK(bins.bin_of(30) == 9);
    CHECK(bins.bin_of(500) == 9);
    CHECK(bins.bin_of(-4) == 0);
    BinSpec bad{30, 0};
    CHECK_THROWS_AS(bad.bin_of(1), InvalidInput);
}

TEST_CASE("rng streams are deterministic per seed and in range") {
    Rng a(42), b(42), c(43);
    bool diverged = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.next_double();
        CHECK(x == b.next_double());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        if (x != c.next_double()) diverged = true;
    }
    CHECK(diverged);
}

TEST_CASE("answer weight follows the additive smoothing formula") {
    SamplerModel m;
    m.smoothing = 0.1;
    m.answer_counts[{"NOUN", "UNK", 0}] = 3;
    m.answer_counts[{"PROPN", "PERSON", 1}] = 1;
    m.answer_total = 4;
    // keys+1 accounts for the unseen bucket
    CHECK(m.answer_weight("NOUN", "UNK", 1) == doctest::Approx(3.1 / 4.3));
    CHECK(m.answer_weight("PROPN", "PERSON", 4) == doctest::Approx(1.1 / 4.3));
    CHECK(m.answer_weight("VERB", "UNK", 1) == doctest::Approx(0.1 / 4.3));
    // length bins: 1 and 2 share bin 0 under the 30/10 spec
    CHECK(m.answer_weight("NOUN", "UNK", 2) == m.answer_weight("NOUN", "UNK", 1));
}

TEST_CASE("style row is a smoothed distribution") {
    SamplerModel m;
    m.smoothing = 0.1;
    auto& row = m.style_counts[{"NOUN", "UNK"}];
    row[static_cast<size_t>(Style::What)] = 7;
    row[static_cast<size_t>(Style::Who)] = 3;
    auto probs = m.style_row("NOUN", "UNK");
    double sum = 0;
    for (double p : probs) {
        CHECK(p > 0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(probs[static_cast<size_t>(Style::What)] == doctest::Approx(7.1 / 10.9));
    // unseen key falls back to uniform
    auto uniform = m.style_row("ADV", "UNK");
    for (double p : uniform) CHECK(p == doctest::Approx(1.0 / kStyleCount));
}

TEST_CASE("sampled answers match crafted probabilities within 0.02") {
    AnnotatedSentence s = two_chunk_sentence();
    SamplerModel m;
    m.smoothing = 0; // exact table, no smoothing mass
    m.answer_counts[{"NOUN", "UNK", 0}] = 0.3;
    m.answer_counts[{"VERB", "UNK", 0}] = 0.1;
    m.answer_total = 0.4;
    Rng rng(7);
    int alpha = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        if (sample_answer(s, m, rng).text == "alpha") ++alpha;
    CHECK(std::abs(alpha / static_cast<double>(n) - 0.75) < 0.02);
}

TEST_CASE("sampled styles match crafted probabilities within 0.02") {
    SamplerModel m;
    m.smoothing = 0;
    auto& row = m.style_counts[{"NOUN", "UNK"}];
    row[static_cast<size_t>(Style::What)] = 0.8;
    row[static_cast<size_t>(Style::Who)] = 0.2;
    Chunk answer{0, 1, "alpha", "NOUN", "UNK"};
    Rng rng(9);
    int what = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        if (sample_style(answer, m, rng) == Style::What) ++what;
    CHECK(std::abs(what / static_cast<double>(n) - 0.8) < 0.02);
}

TEST_CASE("sampled clues match crafted probabilities within 0.02") {
    AnnotatedSentence s = two_chunk_sentence();
    SamplerModel m;
    m.smoothing = 0;
    m.clue_counts[{"NOUN", "UNK", 0}] = 0.3;
    m.clue_counts[{"VERB", "UNK", 0}] = 0.1;
    m.clue_total = 0.4;
    Rng rng(13);
    int alpha = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
        if (sample_clue(s, s.chunks[0], m, rng).text == "alpha") ++alpha;
    CHECK(std::abs(alpha / static_cast<double>(n) - 0.75) < 0.02);
}

TEST_CASE("learn_distributions accumulates counts from records") {
    std::vector<TrainingRecord> records = fixture_records();
    REQUIRE(!records.empty());
    SamplerModel m = learn_distributions(records);
    CHECK(m.smoothing == 0.1);
    CHECK(m.answer_total == doctest::Approx(static_cast<double>(records.size())));
    CHECK(m.clue_total == doctest::Approx(static_cast<double>(records.size())));
    auto marginal = m.style_marginal();
    double sum = 0;
    for (double p : marginal) sum += p;
    CHECK(sum == doctest::Approx(1.0));
    // the fixture corpus is what-heavy; the marginal must reflect it
    for (int st = 0; st < kStyleCount; ++st)
        CHECK(marginal[static_cast<size_t>(Style::What)] >= marginal[static_cast<size_t>(st)]);
    CHECK_THROWS_AS(learn_distributions({}), InvalidInput);
}

TEST_CASE("sample_inputs over-generates without replacement") {
    Annotator ann;
    AnnotatedSentence s = ann.annotate("Mary built a museum in Paris in 1898 .");
    SamplerModel m = learn_distributions(fixture_records());
    Rng rng(21);
    std::vector<GenerationInput> inputs = sample_inputs(s, m, rng);
    CHECK(inputs.size() <= 20); // 5 answers x 2 styles x 2 clues
    CHECK(!inputs.empty());
    std::set<std::tuple<int, int, int, int, int>> seen;
    std::set<std::pair<int, int>> answers;
    for (const GenerationInput& gi : inputs) {
        bool a_ok = false, c_ok = false;
        for (const Chunk& c : s.chunks) {
            if (c == gi.answer) a_ok = true;
            if (c == gi.clue) c_ok = true;
        }
        CHECK(a_ok);
        CHECK(c_ok);
        CHECK(seen.insert({gi.answer.start, gi.answer.end, gi.clue.start, gi.clue.end,
                           static_cast<int>(gi.style)})
                  .second);
        answers.insert({gi.answer.start, gi.answer.end});
    }
    CHECK(answers.size() <= 5);
}

TEST_CASE("sample_inputs is deterministic per seed") {
    Annotator ann;
    AnnotatedSentence s = ann.annotate("Sarah won 5 awards in Berlin in 1936 .");
    SamplerModel m = learn_distributions(fixture_records());
    Rng r1(5), r2(5);
    auto a = sample_inputs(s, m, r1);
    auto b = sample_inputs(s, m, r2);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(generation_input_to_json(a[i]) == generation_input_to_json(b[i]));
}

TEST_CASE("sample_inputs on an empty sentence is empty") {
    SamplerModel m;
    Rng rng(1);
    CHECK(sample_inputs(AnnotatedSentence{}, m, rng).empty());
}

TEST_CASE("model save and load preserve every weight") {
    SamplerModel m = learn_distributions(fixture_records());
    const std::string path = "/tmp/acsqg_sampler_roundtrip.txt";
    save_sampler_model(m, path);
    SamplerModel back = load_sampler_model(path);
    CHECK(back.smoothing == m.smoothing);
    CHECK(back.answer_total == doctest::Approx(m.answer_total));
    CHECK(back.clue_total == doctest::Approx(m.clue_total));
    for (const auto& [key, count] : m.answer_counts)
        CHECK(back.answer_weight(std::get<0>(key), std::get<1>(key), 0) ==
              doctest::Approx(m.answer_weight(std::get<0>(key), std::get<1>(key), 0)));
    for (const auto& [key, row] : m.style_counts) {
        auto p = m.style_row(key.first, key.second);
        auto q = back.style_row(key.first, key.second);
        for (int s = 0; s < kStyleCount; ++s)
            CHECK(q[static_cast<size_t>(s)] == doctest::Approx(p[static_cast<size_t>(s)]));
    }
    std::remove(path.c_str());
}

TEST_CASE("model loader rejects unversioned files") {
    const std::string path = "/tmp/acsqg_sampler_bad.txt";
    {
        std::ofstream out(path);
        out << "smoothing 0.1\n";
    }
    CHECK_THROWS_AS(load_sampler_model(path), FormatError);
    CHECK_THROWS_AS(load_sampler_model("/nonexistent/model.txt"), ResourceError);
    std::remove(path.c_str());
}

TEST_CASE("generation input json round trip") {
    Annotator ann;
    AnnotatedSentence s = ann.annotate("Mary built a museum in Paris .");
    GenerationInput gi;
    gi.sentence = s;
    gi.answer = s.chunks.front();
    gi.clue = s.chunks.back();
    gi.style = Style::Where;
    GenerationInput back = generation_input_from_json(generation_input_to_json(gi));
    CHECK(generation_input_to_json(back) == generation_input_to_json(gi));
    CHECK(back.style == Style::Where);
    CHECK(back.answer.pos == gi.answer.pos); // chunk fields resolved from the sentence
}
