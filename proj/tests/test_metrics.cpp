#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include "acsqg/errors.hpp"
#include "acsqg/metrics.hpp"

using namespace acsqg;

namespace {

// independent single-pair BLEU oracle: straightforward n-gram maps, no
// shared code with the implementation's accumulation loop
double bleu_oracle(const TokenList& hyp, const TokenList& ref, int n) {
    auto grams = [](const TokenList& t, int k) {
        std::map<std::string, int> counts;
        if (static_cast<int>(t.size()) < k) return counts;
        for (size_t i = 0; i + static_cast<size_t>(k) <= t.size(); ++i) {
            std::string key;
            for (int j = 0; j < k; ++j) key += t[i + static_cast<size_t>(j)] + "\x1f";
            ++counts[key];
        }
        return counts;
    };
    double log_sum = 0;
    for (int k = 1; k <= n; ++k) {
        auto h = grams(hyp, k), r = grams(ref, k);
        long total = 0, match = 0;
        for (const auto& [g, c] : h) {
            total += c;
            auto it = r.find(g);
            if (it != r.end()) match += std::min(c, it->second);
        }
        if (total == 0) return 0.0;
        double m = static_cast<double>(match);
        if (m == 0) {
            if (k == 1) return 0.0;
            m = 1e-9;
        }
        log_sum += std::log(m / static_cast<double>(total));
    }
    double bp = 1.0;
    if (!hyp.empty() && hyp.size() < ref.size())
        bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
    if (hyp.empty()) return 0.0;
    return 100.0 * bp * std::exp(log_sum / n);
}

// naive recursive LCS for the oracle (inputs stay tiny)
size_t lcs_naive(const TokenList& a, const TokenList& b, size_t i, size_t j) {
    if (i == 0 || j == 0) return 0;
    if (a[i - 1] == b[j - 1]) return 1 + lcs_naive(a, b, i - 1, j - 1);
    return std::max(lcs_naive(a, b, i - 1, j), lcs_naive(a, b, i, j - 1));
}

double rouge_oracle(const TokenList& hyp, const TokenList& ref) {
    const double lcs = static_cast<double>(lcs_naive(hyp, ref, hyp.size(), ref.size()));
    if (lcs == 0) return 0.0;
    const double r = lcs / static_cast<double>(ref.size());
    const double p = lcs / static_cast<double>(hyp.size());
    return 100.0 * 65.0 * r * p / (r + 64.0 * p);
}

TokenList decode(int code, int max_len) {
    TokenList seq;
    for (int i = 0; i < max_len && code > 0; ++i) {
        const int d = code % 4;
        if (d == 0) break;
        seq.push_back(std::string(1, static_cast<char>('a' + d - 1)));
        code /= 4;
    }
    return seq;
}

} // namespace

TEST_CASE("bleu-1 hand example with brevity penalty") {
    // 3/3 unigrams match, hypothesis 3 vs reference 4 tokens:
    // 100 * exp(1 - 4/3) = 71.6531
    const double got = bleu_n({{"a", "b", "c"}}, {{"a", "b", "c", "d"}}, 1);
    CHECK(got == doctest::Approx(71.6531).epsilon(1e-6));
    CHECK(got == doctest::Approx(100.0 * std::exp(-1.0 / 3.0)));
}

TEST_CASE("bleu hand examples without length mismatch") {
    CHECK(bleu_n({{"a", "b", "c", "d"}}, {{"a", "b", "c", "d"}}, 4) == doctest::Approx(100.0));
    // too short for any 4-gram: zero by convention
    CHECK(bleu_n({{"a", "b", "c"}}, {{"a", "b", "c"}}, 4) == 0.0);
    // 2-gram precision 1/2 with unigram precision 2/3 over equal lengths:
    // hyp "a x b", ref "a b x" -> unigram 3/3, bigram 0/2 smoothed
    bool smoothed = false;
    const double b2 = bleu_n({{"a", "x", "b"}}, {{"a", "b", "x"}}, 2, &smoothed);
    CHECK(smoothed);
    CHECK(b2 == doctest::Approx(100.0 * std::sqrt(1e-9 / 2.0)));
    // zero unigram overlap pins the score to zero, no smoothing
    smoothed = true;
    CHECK(bleu_n({{"q"}}, {{"z"}}, 1, &smoothed) == 0.0);
}

TEST_CASE("rouge-l hand example") {
    // lcs("a b c", "a c d") = 2; beta = 8 weights recall
    CHECK(rouge_l({"a", "b", "c"}, {"a", "c", "d"}) == doctest::Approx(66.6667).epsilon(1e-5));
    CHECK(rouge_l({"a", "b"}, {"a", "b"}) == doctest::Approx(100.0));
    CHECK(rouge_l({"a"}, {"z"}) == 0.0);
    CHECK_THROWS_AS(rouge_l({}, {"a"}), InvalidInput);
}

TEST_CASE("bleu and rouge agree with oracles on all short pairs") {
    // every hypothesis/reference pair of length 0..3 over {a, b, c}
    for (int h = 0; h < 64; ++h) {
        TokenList hyp = decode(h, 3);
        for (int r = 0; r < 64; ++r) {
            TokenList ref = decode(r, 3);
            for (int n = 1; n <= 3; ++n) {
                const double want = bleu_oracle(hyp, ref, n);
                const double got = bleu_n({hyp}, {ref}, n);
                CHECK(got == doctest::Approx(want).epsilon(1e-9));
                CHECK(got >= 0.0);
                CHECK(got <= 100.0 + 1e-9);
            }
            if (!hyp.empty() && !ref.empty())
                CHECK(rouge_l(hyp, ref) == doctest::Approx(rouge_oracle(hyp, ref)));
        }
    }
}

TEST_CASE("metrics are invariant under token relabeling") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        TokenList hyp, ref, hyp2, ref2;
        const int hn = 1 + static_cast<int>(rng() % 5);
        const int rn = 1 + static_cast<int>(rng() % 5);
        auto relabel = [](const std::string& t) { return "tok-" + t; };
        for (int i = 0; i < hn; ++i) {
            std::string t(1, static_cast<char>('a' + rng() % 3));
            hyp.push_back(t);
            hyp2.push_back(relabel(t));
        }
        for (int i = 0; i < rn; ++i) {
            std::string t(1, static_cast<char>('a' + rng() % 3));
            ref.push_back(t);
            ref2.push_back(relabel(t));
        }
        for (int n = 1; n <= 4; ++n)
            CHECK(bleu_n({hyp}, {ref}, n) == doctest::Approx(bleu_n({hyp2}, {ref2}, n)));
        CHECK(rouge_l(hyp, ref) == doctest::Approx(rouge_l(hyp2, ref2)));
    }
}

TEST_CASE("bleu input validation") {
    CHECK_THROWS_AS(bleu_n({{"a"}}, {}, 1), InvalidInput);
    CHECK_THROWS_AS(bleu_n({{"a"}}, {{"a"}}, 0), InvalidInput);
    CHECK_THROWS_AS(bleu_n({{"a"}}, {{"a"}}, 5), InvalidInput);
    CHECK(bleu_n({}, {}, 4) == 0.0);
}

TEST_CASE("evaluate pairs by id and strips punctuation") {
    const std::string gen = "/tmp/acsqg_eval_gen.jsonl";
    const std::string ref = "/tmp/acsqg_eval_ref.jsonl";
    {
        std::ofstream g(gen), r(ref);
        g << R"({"id":"q2","question":"Who built the museum ?"})" << "\n";
        g << R"({"id":"q1","question":"What is this ?"})" << "\n";
        r << R"({"id":"q1","question":"What is this ?"})" << "\n";
        r << R"({"id":"q2","question":"Who built the museum ?"})" << "\n";
    }
    EvalReport report = evaluate(gen, ref);
    CHECK(report.sample_count == 2);
    CHECK(report.bleu_1 == doctest::Approx(100.0));
    CHECK(report.bleu_4 == doctest::Approx(100.0));
    CHECK(report.rouge_l == doctest::Approx(100.0));
    CHECK_FALSE(report.smoothing_applied);
    std::remove(gen.c_str());
    std::remove(ref.c_str());
}

TEST_CASE("evaluate falls back to line pairing and rejects disjoint files") {
    const std::string gen = "/tmp/acsqg_eval_gen2.jsonl";
    const std::string ref = "/tmp/acsqg_eval_ref2.jsonl";
    {
        std::ofstream g(gen), r(ref);
        g << R"({"question":"who won the race"})" << "\n";
        r << R"({"question":"who won the race"})" << "\n";
    }
    CHECK(evaluate(gen, ref).bleu_1 == doctest::Approx(100.0));
    {
        std::ofstream g(gen), r(ref);
        g << R"({"id":"a","question":"who"})" << "\n";
        r << R"({"id":"b","question":"who"})" << "\n";
    }
    CHECK_THROWS_AS(evaluate(gen, ref), InvalidInput);
    CHECK_THROWS_AS(evaluate("/nonexistent.jsonl", ref), InvalidInput);
    std::remove(gen.c_str());
    std::remove(ref.c_str());
}

TEST_CASE("report file lists every metric") {
    EvalReport report;
    report.sample_count = 3;
    report.bleu_1 = 71.6531;
    report.rouge_l = 66.6667;
    const std::string path = "/tmp/acsqg_eval_report.txt";
    write_eval_report(report, path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("samples 3") != std::string::npos);
    CHECK(text.find("bleu_1 71.6531") != std::string::npos);
    CHECK(text.find("rouge_l 66.6667") != std::string::npos);
    CHECK(text.find("smoothing_applied no") != std::string::npos);
    std::remove(path.c_str());
}
