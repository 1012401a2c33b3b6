#include "acsqg/related_words.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "acsqg/errors.hpp"
#include "acsqg/text.hpp"

namespace acsqg {

const std::unordered_set<std::string>& RelatedWordsDict::lookup(const std::string& word) const {
    static const std::unordered_set<std::string> empty;
    auto it = related.find(text::lowercase(word));
    return it == related.end() ? empty : it->second;
}

void RelatedWordsDict::add(const std::string& word, const std::string& rel) {
    const std::string w = text::lowercase(word);
    const std::string r = text::lowercase(rel);
    if (w == r) return;
    related[w].insert(r);
}

RelatedWordsDict build_related_words(const std::string& vector_file,
                                     const std::string& synonym_file, int neighbor_count) {
    if (neighbor_count < 1) throw InvalidInput("build_related_words: N must be >= 1");
    RelatedWordsDict dict;
    dict.neighbor_count = neighbor_count;

    std::vector<std::string> words;
    std::vector<std::vector<double>> vecs;
    {
        std::ifstream in(vector_file);
        if (!in) throw ResourceError("cannot read vector file: " + vector_file);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string w;
            ss >> w;
            std::vector<double> v;
            double x;
            while (ss >> x) v.push_back(x);
            if (v.empty()) continue;
            words.push_back(text::lowercase(w));
            vecs.push_back(std::move(v));
        }
    }

    auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0, na = 0, nb = 0;
        const size_t d = std::min(a.size(), b.size());
        for (size_t k = 0; k < d; ++k) {
            dot += a[k] * b[k];
            na += a[k] * a[k];
            nb += b[k] * b[k];
        }
        if (na == 0 || nb == 0) return 0.0;
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };

    for (size_t i = 0; i < words.size(); ++i) {
        std::vector<std::pair<double, std::string>> scored;
        for (size_t j = 0; j < words.size(); ++j) {
            if (i == j || words[i] == words[j]) continue;
            scored.emplace_back(cosine(vecs[i], vecs[j]), words[j]);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        const size_t keep = std::min<size_t>(static_cast<size_t>(neighbor_count), scored.size());
        for (size_t k = 0; k < keep; ++k) dict.add(words[i], scored[k].second);
    }

    if (!synonym_file.empty()) {
        std::ifstream in(synonym_file);
        if (!in) throw ResourceError("cannot read synonym file: " + synonym_file);
        std::string line;
        while (std::getline(in, line)) {
            auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string head = line.substr(0, colon);
            std::istringstream ss(line.substr(colon + 1));
            std::string syn;
            while (ss >> syn) dict.add(head, syn);
        }
    }
    return dict;
}

bool is_soft_copy(const std::string& question_word, const std::string& passage_word,
                  const RelatedWordsDict& dict) {
    const std::string q = text::lowercase(question_word);
    const std::string p = text::lowercase(passage_word);
    if (q == p) return true;
    if (text::stem(q) == text::stem(p)) return true;
    if (dict.lookup(p).count(q)) return true;
    if (dict.lookup(q).count(p)) return true;
    return false;
}

void save_related_words(const RelatedWordsDict& dict, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot write: " + path);
    out << "# related-words v1 N=" << dict.neighbor_count << "\n";
    std::vector<std::string> keys;
    for (const auto& [w, _] : dict.related) keys.push_back(w);
    std::sort(keys.begin(), keys.end());
    for (const std::string& w : keys) {
        std::vector<std::string> rels(dict.related.at(w).begin(), dict.related.at(w).end());
        std::sort(rels.begin(), rels.end());
        out << w << ":";
        for (const std::string& r : rels) out << " " << r;
        out << "\n";
    }
}

RelatedWordsDict load_related_words(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot read: " + path);
    RelatedWordsDict dict;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("N=");
            if (pos != std::string::npos) dict.neighbor_count = std::stoi(line.substr(pos + 2));
            continue;
        }
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string head = line.substr(0, colon);
        std::istringstream ss(line.substr(colon + 1));
        std::string syn;
        while (ss >> syn) dict.add(head, syn);
    }
    return dict;
}

} // namespace acsqg
