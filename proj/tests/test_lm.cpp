#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>

#include "acsqg/errors.hpp"
#include "acsqg/lm.hpp"
#include "acsqg/text.hpp"

using namespace acsqg;

namespace {

const std::string kData = ACSQG_DATA_DIR;

std::vector<TrainingRecord> fixture_records(size_t limit) {
    Annotator ann;
    RelatedWordsDict dict =
        build_related_words(kData + "/vectors.txt", kData + "/synonyms.txt", 5);
    auto records = build_training_records(load_squad(kData + "/corpus_tiny.json"), dict, ann);
    if (records.size() > limit) records.resize(limit);
    return records;
}

GenerationInput tiny_input() {
    Annotator ann;
    GenerationInput gi;
    gi.sentence = ann.annotate("Mary built a museum in Paris in 1898 .");
    for (const Chunk& c : gi.sentence.chunks) {
        if (c.text == "Mary") gi.answer = c;
        if (c.text == "a museum") gi.clue = c;
    }
    gi.style = Style::Who;
    return gi;
}

} // namespace

TEST_CASE("tokenizer markers are fixed atomic ids") {
    LmTokenizer tok;
    CHECK(tok.size() == LmTokenizer::kSpecialCount);
    CHECK(tok.id_of(tok.token_of(LmTokenizer::kClue)) == LmTokenizer::kClue);
    CHECK(tok.is_marker(LmTokenizer::kBos));
    CHECK(tok.is_marker(LmTokenizer::kEos));
    CHECK_FALSE(tok.is_marker(LmTokenizer::kPad));
    const int a = tok.add("museum");
    CHECK(tok.add("museum") == a); // idempotent
    CHECK(tok.id_of("museum") == a);
    CHECK(tok.id_of("unseen-token") == LmTokenizer::kUnk);
}

TEST_CASE("serialized prompt has the five regions in order") {
    LmTokenizer tok;
    GenerationInput gi = tiny_input();
    const std::string question = "Who built a museum ?";
    PromptSequence seq = serialize_prompt(gi, &question, tok);
    REQUIRE(seq.token_ids.size() == seq.segments.size());
    CHECK(seq.has_target);
    CHECK(seq.token_ids.front() == LmTokenizer::kBos);
    CHECK(seq.token_ids.back() == LmTokenizer::kEos);
    // markers appear exactly once each, in order
    std::vector<int> marker_positions;
    for (int m : {LmTokenizer::kClue, LmTokenizer::kAns, LmTokenizer::kStyle,
                  LmTokenizer::kQues}) {
        CHECK(std::count(seq.token_ids.begin(), seq.token_ids.end(), m) == 1);
        marker_positions.push_back(static_cast<int>(
            std::find(seq.token_ids.begin(), seq.token_ids.end(), m) - seq.token_ids.begin()));
    }
    CHECK(std::is_sorted(marker_positions.begin(), marker_positions.end()));
    // segment labels switch at the markers; the answer span ("Mary",
    // token 0) overrides the passage segment, "built" does not
    CHECK(seq.segments[1] == Segment::Answer);
    CHECK(seq.segments[2] == Segment::Passage);
    CHECK(seq.segments.back() == Segment::Question);
}

TEST_CASE("prompt deserialization inverts serialization") {
    LmTokenizer tok;
    GenerationInput gi = tiny_input();
    const std::string question = "Who built a museum ?";
    PromptParts parts = deserialize_prompt(serialize_prompt(gi, &question, tok), tok);
    CHECK(text::join(parts.passage) ==
          text::lowercase(text::join(text::tokenize(gi.sentence.raw_text))));
    CHECK(text::join(parts.clue) == "a museum");
    CHECK(text::join(parts.answer) == "mary");
    CHECK(parts.style == "who");
    CHECK(text::join(parts.question) == "who built a museum ?");

    // generation mode leaves the question region empty
    PromptSequence gen = serialize_prompt(gi, nullptr, tok);
    CHECK_FALSE(gen.has_target);
    CHECK(gen.token_ids.back() == LmTokenizer::kQues);
    CHECK(deserialize_prompt(gen, tok).question.empty());
}

TEST_CASE("max_context truncates only the passage region") {
    LmTokenizer tok;
    GenerationInput gi = tiny_input();
    const std::string question = "Who built a museum ?";
    PromptSequence full = serialize_prompt(gi, &question, tok);
    PromptSequence cut = serialize_prompt(gi, &question, tok,
                                          static_cast<int>(full.token_ids.size()) - 3);
    CHECK(cut.token_ids.size() <= full.token_ids.size() - 3);
    PromptParts parts = deserialize_prompt(cut, tok);
    CHECK(parts.passage.size() < 9);
    CHECK(text::join(parts.answer) == "mary"); // non-passage regions intact
    CHECK(text::join(parts.question) == "who built a museum ?");
}

TEST_CASE("nucleus set is the minimal top mass") {
    Eigen::VectorXd probs(4);
    probs << 0.5, 0.3, 0.15, 0.05;
    CHECK(nucleus_set(probs, 0.5) == std::vector<int>{0});
    CHECK(nucleus_set(probs, 0.6) == std::vector<int>{0, 1});
    CHECK(nucleus_set(probs, 0.8) == std::vector<int>{0, 1});
    CHECK(nucleus_set(probs, 0.81) == std::vector<int>{0, 1, 2});
    CHECK(nucleus_set(probs, 1.0).size() == 4);
    // minimality: removing the least member drops the mass below p
    for (double p : {0.3, 0.6, 0.9, 0.99}) {
        auto set = nucleus_set(probs, p);
        double mass = 0;
        for (int i : set) mass += probs(i);
        CHECK(mass >= p - 1e-12);
        if (set.size() > 1) CHECK(mass - probs(set.back()) < p);
    }
}

TEST_CASE("nucleus sampling stays inside the set and is deterministic") {
    Eigen::VectorXd probs(5);
    probs << 0.4, 0.3, 0.2, 0.07, 0.03;
    Rng a(3), b(3);
    for (int i = 0; i < 200; ++i) {
        const int x = nucleus_sample(probs, 0.7, a);
        CHECK(x == nucleus_sample(probs, 0.7, b));
        CHECK(x >= 0);
        CHECK(x <= 1); // the 0.7-nucleus is {0, 1}
    }
}

TEST_CASE("finetune lowers the question-region loss") {
    auto records = fixture_records(6);
    REQUIRE(!records.empty());
    TinyGruLm::Config cfg;
    cfg.embed_dim = 8;
    cfg.hidden = 16;
    cfg.seed = 5;
    TinyGruLm lm(cfg);
    FinetuneReport report = finetune(records, lm, 4, 2);
    REQUIRE(report.epoch_loss.size() == 4);
    CHECK(report.epoch_loss.back() < report.epoch_loss.front());
    CHECK_THROWS_AS(finetune({}, lm, 1, 1), InvalidInput);
}

TEST_CASE("next token distribution is a proper distribution") {
    auto records = fixture_records(3);
    TinyGruLm::Config cfg;
    cfg.embed_dim = 8;
    cfg.hidden = 16;
    TinyGruLm lm(cfg);
    finetune(records, lm, 1, 2);
    LmTokenizer& tok = lm.tokenizer();
    PromptSequence seq = serialize_prompt(tiny_input(), nullptr, tok, lm.max_context());
    lm.sync_vocab();
    Eigen::VectorXd probs = lm.next_token_distribution(seq);
    REQUIRE(probs.size() == tok.size());
    CHECK(probs.minCoeff() >= 0);
    CHECK(probs.sum() == doctest::Approx(1.0));
}

TEST_CASE("nucleus_generate is deterministic per seed and terminates") {
    auto records = fixture_records(4);
    TinyGruLm::Config cfg;
    cfg.embed_dim = 8;
    cfg.hidden = 16;
    TinyGruLm lm(cfg);
    finetune(records, lm, 2, 2);
    GenerationInput gi = tiny_input();
    Rng r1(11), r2(11);
    const std::string a = nucleus_generate(gi, lm, 0.9, 12, r1);
    const std::string b = nucleus_generate(gi, lm, 0.9, 12, r2);
    CHECK(a == b);
    CHECK(text::tokenize(a).size() <= 12);
}

TEST_CASE("tiny lm save and load round trip") {
    auto records = fixture_records(3);
    TinyGruLm::Config cfg;
    cfg.embed_dim = 8;
    cfg.hidden = 16;
    TinyGruLm lm(cfg);
    finetune(records, lm, 1, 2);
    // serialize before saving so both models share the final vocabulary
    PromptSequence seq = serialize_prompt(tiny_input(), nullptr, lm.tokenizer(),
                                          lm.max_context());
    lm.sync_vocab();
    const std::string path = "/tmp/acsqg_lm_roundtrip.ckpt";
    lm.save(path);
    auto back = TinyGruLm::load(path);
    REQUIRE(back != nullptr);
    CHECK(back->tokenizer().size() == lm.tokenizer().size());
    Eigen::VectorXd p = lm.next_token_distribution(seq);
    Eigen::VectorXd q = back->next_token_distribution(seq);
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);
    std::remove(path.c_str());
}
