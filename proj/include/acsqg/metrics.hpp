#pragma once

#include <string>
#include <vector>

namespace acsqg {

struct EvalReport {
    double bleu_1 = 0, bleu_2 = 0, bleu_3 = 0, bleu_4 = 0; // scaled 0-100
    double rouge_l = 0;                                    // scaled 0-100
    size_t sample_count = 0;
    bool smoothing_applied = false; // add-epsilon on zero n-gram counts
};

using TokenList = std::vector<std::string>;

// Corpus-level BLEU-n: modified n-gram precision clipped against the
// reference, geometric mean over orders 1..n, brevity penalty. Zero
// higher-order counts get add-epsilon smoothing (flagged in EvalReport).
double bleu_n(const std::vector<TokenList>& hypotheses, const std::vector<TokenList>& references,
              int n, bool* smoothed = nullptr);

// Sentence-level LCS F-measure, recall-weighted (beta = 8), scaled 0-100.
double rouge_l(const TokenList& hypothesis, const TokenList& reference);

// Mean sentence ROUGE-L over pairs.
double rouge_l_corpus(const std::vector<TokenList>& hypotheses,
                      const std::vector<TokenList>& references);

// Pairs records by id between two JSONL files with {"id":..., "question":...}
// lines and computes the report over metric tokens.
EvalReport evaluate(const std::string& gen_file, const std::string& ref_file);

void write_eval_report(const EvalReport& report, const std::string& path);

} // namespace acsqg
