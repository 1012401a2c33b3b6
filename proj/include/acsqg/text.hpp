#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace acsqg::text {

// Splits on whitespace and separates leading/trailing punctuation into
// their own tokens. Contractions ("n't", "'s", ...) stay attached.
std::vector<std::string> tokenize(const std::string& s);

std::string lowercase(const std::string& s);

// Rule-based suffix stemmer (Porter step-1 style: sses/ies/s, ed/ing
// with consonant handling, trailing y -> i). Deterministic, lexicon-free.
std::string stem(const std::string& word);

bool is_stopword(const std::string& lowercased);

// Extractive-QA answer normalization: lowercase, drop punctuation,
// drop articles, collapse whitespace.
std::vector<std::string> normalize_answer_tokens(const std::string& s);

// Joins tokens with single spaces.
std::string join(const std::vector<std::string>& tokens);

// Metric tokenization: punctuation-split then lowercased.
std::vector<std::string> metric_tokens(const std::string& s);

bool is_punctuation(const std::string& tok);

} // namespace acsqg::text
