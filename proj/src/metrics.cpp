#include "acsqg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "acsqg/errors.hpp"
#include "acsqg/text.hpp"

namespace acsqg {

using json = nlohmann::json;

namespace {

constexpr double kEpsilon = 1e-9;
constexpr double kRougeBeta = 8.0;

std::map<std::vector<std::string>, int> ngram_counts(const TokenList& tokens, int n) {
    std::map<std::vector<std::string>, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); ++i)
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                          tokens.begin() + static_cast<long>(i) + n)];
    return counts;
}

size_t lcs_length(const TokenList& a, const TokenList& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<size_t> prev(m + 1, 0), cur(m + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            if (a[i - 1] == b[j - 1]) cur[j] = prev[j - 1] + 1;
            else cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

} // namespace

double bleu_n(const std::vector<TokenList>& hypotheses, const std::vector<TokenList>& references,
              int n, bool* smoothed) {
    if (hypotheses.size() != references.size())
        throw InvalidInput("bleu_n: hypothesis/reference count mismatch");
    if (n < 1 || n > 4) throw InvalidInput("bleu_n: order must be in 1..4");
    if (hypotheses.empty()) return 0.0;

    std::vector<long> matched(static_cast<size_t>(n), 0), total(static_cast<size_t>(n), 0);
    long hyp_len = 0, ref_len = 0;
    for (size_t k = 0; k < hypotheses.size(); ++k) {
        hyp_len += static_cast<long>(hypotheses[k].size());
        ref_len += static_cast<long>(references[k].size());
        for (int order = 1; order <= n; ++order) {
            auto h = ngram_counts(hypotheses[k], order);
            auto r = ngram_counts(references[k], order);
            for (const auto& [gram, count] : h) {
                total[static_cast<size_t>(order - 1)] += count;
                auto it = r.find(gram);
                if (it != r.end())
                    matched[static_cast<size_t>(order - 1)] += std::min(count, it->second);
            }
        }
    }

    bool used_smoothing = false;
    double log_precision_sum = 0;
    for (int order = 0; order < n; ++order) {
        const double tot = static_cast<double>(total[static_cast<size_t>(order)]);
        if (tot == 0) return 0.0;
        double m = static_cast<double>(matched[static_cast<size_t>(order)]);
        if (m == 0) {
            if (order == 0) return 0.0; // no unigram overlap means zero by convention
            m = kEpsilon;
            used_smoothing = true;
        }
        log_precision_sum += std::log(m / tot);
    }
    if (smoothed) *smoothed = used_smoothing;

    double brevity = 1.0;
    if (hyp_len < ref_len && hyp_len > 0)
        brevity = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    if (hyp_len == 0) return 0.0;
    return 100.0 * brevity * std::exp(log_precision_sum / n);
}

double rouge_l(const TokenList& hypothesis, const TokenList& reference) {
    if (hypothesis.empty() || reference.empty()) throw InvalidInput("rouge_l: empty input");
    const double lcs = static_cast<double>(lcs_length(hypothesis, reference));
    if (lcs == 0) return 0.0;
    const double recall = lcs / static_cast<double>(reference.size());
    const double precision = lcs / static_cast<double>(hypothesis.size());
    const double b2 = kRougeBeta * kRougeBeta;
    return 100.0 * (1.0 + b2) * recall * precision / (recall + b2 * precision);
}

double rouge_l_corpus(const std::vector<TokenList>& hypotheses,
                      const std::vector<TokenList>& references) {
    if (hypotheses.size() != references.size())
        throw InvalidInput("rouge_l_corpus: count mismatch");
    if (hypotheses.empty()) return 0.0;
    double sum = 0;
    for (size_t k = 0; k < hypotheses.size(); ++k) sum += rouge_l(hypotheses[k], references[k]);
    return sum / static_cast<double>(hypotheses.size());
}

EvalReport evaluate(const std::string& gen_file, const std::string& ref_file) {
    auto read = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InvalidInput("evaluate: cannot open " + path);
        std::map<std::string, std::string> by_id;
        std::string line;
        size_t auto_id = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            const std::string id =
                j.contains("id") ? j.at("id").get<std::string>() : std::to_string(auto_id);
            by_id[id] = j.at("question").get<std::string>();
            ++auto_id;
        }
        return by_id;
    };
    auto gen = read(gen_file);
    auto ref = read(ref_file);

    std::vector<TokenList> hyps, refs;
    std::vector<std::string> unmatched;
    for (const auto& [id, question] : gen) {
        auto it = ref.find(id);
        if (it == ref.end()) {
            unmatched.push_back(id);
            continue;
        }
        TokenList h, r;
        for (const std::string& t : text::metric_tokens(question))
            if (!text::is_punctuation(t)) h.push_back(t);
        for (const std::string& t : text::metric_tokens(it->second))
            if (!text::is_punctuation(t)) r.push_back(t);
        if (h.empty() || r.empty()) continue;
        hyps.push_back(std::move(h));
        refs.push_back(std::move(r));
    }
    if (hyps.empty()) {
        std::string offenders;
        for (const std::string& id : unmatched) offenders += " " + id;
        throw InvalidInput("evaluate: no paired records;" + offenders);
    }

    EvalReport report;
    report.sample_count = hyps.size();
    bool smoothed = false, any_smoothed = false;
    report.bleu_1 = bleu_n(hyps, refs, 1, &smoothed);
    any_smoothed |= smoothed;
    report.bleu_2 = bleu_n(hyps, refs, 2, &smoothed);
    any_smoothed |= smoothed;
    report.bleu_3 = bleu_n(hyps, refs, 3, &smoothed);
    any_smoothed |= smoothed;
    report.bleu_4 = bleu_n(hyps, refs, 4, &smoothed);
    any_smoothed |= smoothed;
    report.rouge_l = rouge_l_corpus(hyps, refs);
    report.smoothing_applied = any_smoothed;
    return report;
}

void write_eval_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot write: " + path);
    out.precision(4);
    out << std::fixed;
    out << "samples " << report.sample_count << "\n";
    out << "bleu_1 " << report.bleu_1 << "\n";
    out << "bleu_2 " << report.bleu_2 << "\n";
    out << "bleu_3 " << report.bleu_3 << "\n";
    out << "bleu_4 " << report.bleu_4 << "\n";
    out << "rouge_l " << report.rouge_l << "\n";
    out << "smoothing_applied " << (report.smoothing_applied ? "yes" : "no") << "\n";
}

} // namespace acsqg
