#include "acsqg/text.hpp"

#include <algorithm>
#include <cctype>

namespace acsqg::text {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-';
}

bool vowel_at(const std::string& w, size_t i) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(w[i])));
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    // y is a vowel when not word-initial and preceded by a consonant
    if (c == 'y' && i > 0) return !vowel_at(w, i - 1);
    return false;
}

bool has_vowel(const std::string& w, size_t upto) {
    for (size_t i = 0; i < upto && i < w.size(); ++i)
        if (vowel_at(w, i)) return true;
    return false;
}

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> set = {
        "a", "an", "the", "this", "that", "these", "those",
        "i", "you", "he", "she", "it", "we", "they", "me", "him", "her",
        "us", "them", "my", "your", "his", "its", "our", "their", "mine",
        "yours", "hers", "ours", "theirs", "himself", "herself", "itself",
        "myself", "yourself", "ourselves", "themselves",
        "am", "is", "are", "was", "were", "be", "been", "being",
        "do", "does", "did", "have", "has", "had", "having",
        "will", "would", "shall", "should", "can", "could", "may", "might",
        "must", "of", "in", "on", "at", "by", "for", "with", "to", "from",
        "into", "onto", "over", "under", "about", "between", "through",
        "during", "before", "after", "above", "below", "up", "down", "out",
        "off", "and", "or", "but", "nor", "so", "yet", "if", "because",
        "while", "when", "where", "as", "than", "then", "there", "here",
        "not", "no", "nor", "only", "own", "same", "such", "too", "very",
        "s", "t", "just", "also", "both", "each", "few", "more", "most",
        "other", "some", "any", "all", "what", "which", "who", "whom",
        "whose", "why", "how",
    };
    return set;
}

} // namespace

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    size_t i = 0;
    const size_t n = s.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (!is_word_char(s[i])) {
            out.emplace_back(1, s[i]);
            ++i;
            continue;
        }
        size_t j = i;
        while (j < n && is_word_char(s[j])) ++j;
        // strip trailing apostrophes/hyphens back off the word
        size_t k = j;
        while (k > i && (s[k - 1] == '\'' || s[k - 1] == '-')) --k;
        std::string word = s.substr(i, k - i);
        // split possessive / contraction suffixes as attached: keep whole token
        if (!word.empty()) out.push_back(word);
        for (size_t t = k; t < j; ++t) out.emplace_back(1, s[t]);
        i = j;
    }
    return out;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string stem(const std::string& word) {
    std::string w = lowercase(word);
    if (w.size() <= 3) return w;
    if (ends_with(w, "sses")) {
        w.erase(w.size() - 2);
    } else if (ends_with(w, "ies")) {
        w.replace(w.size() - 3, 3, "i");
    } else if (ends_with(w, "ss")) {
        // keep
    } else if (ends_with(w, "s") && !ends_with(w, "us") && !ends_with(w, "is")) {
        w.erase(w.size() - 1);
    }
    if (w.size() > 4 && ends_with(w, "eed")) {
        w.erase(w.size() - 1);
    } else if (w.size() > 4 && ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
        w.erase(w.size() - 2);
        if (w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] &&
            !vowel_at(w, w.size() - 1) && w.back() != 'l' && w.back() != 's' && w.back() != 'z')
            w.erase(w.size() - 1);
    } else if (w.size() > 5 && ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
        w.erase(w.size() - 3);
        if (w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] &&
            !vowel_at(w, w.size() - 1) && w.back() != 'l' && w.back() != 's' && w.back() != 'z')
            w.erase(w.size() - 1);
        else if (w.size() >= 2 && !vowel_at(w, w.size() - 1) && vowel_at(w, w.size() - 2) &&
                 w.size() >= 3 && !vowel_at(w, w.size() - 3))
            w.push_back('e');
    }
    if (w.size() > 2 && w.back() == 'y' && !vowel_at(w, w.size() - 2))
        w.back() = 'i';
    return w;
}

bool is_stopword(const std::string& lowercased) {
    return stopwords().count(lowercased) > 0;
}

std::vector<std::string> normalize_answer_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && cur != "a" && cur != "an" && cur != "the") out.push_back(cur);
        cur.clear();
    };
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::vector<std::string> metric_tokens(const std::string& s) {
    std::vector<std::string> toks = tokenize(lowercase(s));
    return toks;
}

bool is_punctuation(const std::string& tok) {
    return !tok.empty() &&
           std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::ispunct(c); });
}

} // namespace acsqg::text
