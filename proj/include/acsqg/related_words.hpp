#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>

namespace acsqg {

// R(w): synonyms plus top-N cosine neighbors, case-normalized, w excluded.
struct RelatedWordsDict {
    std::unordered_map<std::string, std::unordered_set<std::string>> related;
    int neighbor_count = 5;

    const std::unordered_set<std::string>& lookup(const std::string& word) const;
    void add(const std::string& word, const std::string& rel);
};

// vector_file: one "word f1 f2 ... fd" line per word.
// synonym_file: "word: syn1 syn2 ..." lines; empty path means no synonyms.
RelatedWordsDict build_related_words(const std::string& vector_file,
                                     const std::string& synonym_file,
                                     int neighbor_count = 5);

bool is_soft_copy(const std::string& question_word, const std::string& passage_word,
                  const RelatedWordsDict& dict);

void save_related_words(const RelatedWordsDict& dict, const std::string& path);
RelatedWordsDict load_related_words(const std::string& path);

} // namespace acsqg
