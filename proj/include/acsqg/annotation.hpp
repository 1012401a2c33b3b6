#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace acsqg {

struct Token {
    int index = 0;
    std::string text;
    std::string lemma;
    std::string pos;         // coarse universal tag (NOUN, VERB, DET, ...)
    std::string ner = "UNK"; // entity tag or "UNK"
    bool is_content = false;
    int head_index = 0;      // dependency head; self for root
    int begin_char = 0;      // span in raw_text
    int end_char = 0;
};

struct Chunk {
    int start = 0; // token index, inclusive
    int end = 0;   // token index, exclusive
    std::string text;
    std::string pos;
    std::string ner = "UNK";

    int length() const { return end - start; }
    bool operator==(const Chunk& o) const { return start == o.start && end == o.end; }
};

struct AnnotatedSentence {
    std::string raw_text;
    std::vector<Token> tokens;
    std::vector<Chunk> chunks; // candidate set, deduplicated on (start, end)
    std::string paragraph_id;

    int root_index() const;
};

// Open-class POS check plus a stop-word list; see is_content on Token.
bool is_content_word(const Token& token);

// Union of noun chunks, named-entity spans and contiguous dependency
// subtrees (<= max_subtree_len tokens), trimmed of boundary punctuation,
// deduplicated and sorted by (start, end). Falls back to per-content-token
// chunks so the result is never empty for a non-empty sentence.
std::vector<Chunk> candidate_chunks(const AnnotatedSentence& sentence, int max_subtree_len = 30);

// Shortest path between tokens i and j in the dependency tree treated as
// an undirected graph; 0 iff i == j.
int dependency_distance(const AnnotatedSentence& sentence, int i, int j);

// Deterministic rule-based annotator: offset-preserving tokenization,
// lexicon+suffix POS tagging over a coarse universal tagset, gazetteer
// NER, suffix lemmatization and heuristic dependency heads. Results are
// optionally cached to a JSONL file keyed by SHA-256 of the raw text.
class Annotator {
public:
    explicit Annotator(std::string cache_path = "");
    ~Annotator();

    AnnotatedSentence annotate(const std::string& raw_text) const;

private:
    AnnotatedSentence annotate_uncached(const std::string& raw_text) const;

    std::string cache_path_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<std::string, AnnotatedSentence> cache_;
};

std::string sha256_hex(const std::string& data);

// JSON (de)serialization used by the cache and by record files.
std::string sentence_to_json(const AnnotatedSentence& s);
AnnotatedSentence sentence_from_json(const std::string& json_text);

} // namespace acsqg
