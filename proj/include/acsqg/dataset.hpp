#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acsqg/annotation.hpp"
#include "acsqg/related_words.hpp"

namespace acsqg {

enum class Style { Who, Where, When, Why, Which, What, How, YesNo, Other };

inline constexpr int kStyleCount = 9;

std::string style_name(Style s);
std::optional<Style> style_from_name(const std::string& name);
const std::vector<Style>& all_styles();

struct ClueScore {
    Chunk chunk;
    int token_overlap = 0;
    int stem_overlap = 0;
    int soft_copy_overlap = 0;
    int contained = 0; // 0/1
    int total = 0;
};

struct TrainingRecord {
    AnnotatedSentence passage;
    std::string question;
    Chunk answer;
    Chunk clue;
    Style style = Style::Other;
    std::string source_id;
};

// Scores every candidate chunk by content-word token/stem overlap with the
// question, soft-copy count and a containment flag; returns the argmax
// (ties: smaller start, then shorter) plus the full score table.
std::pair<Chunk, std::vector<ClueScore>> extract_clue(const AnnotatedSentence& passage,
                                                      const std::string& question,
                                                      const Chunk& answer,
                                                      const RelatedWordsDict& dict);

// Ordered containment check for who/where/when/why/which/what/how, then a
// yes-no first-word test, else Other.
Style classify_style(const std::string& question);

struct SquadSample {
    std::string context;
    std::string question;
    std::string answer_text;
    int answer_start = 0; // character offset into context
    std::string id;
};

// Parses a SQuAD v1.1-schema JSON file (data -> paragraphs -> qas).
std::vector<SquadSample> load_squad(const std::string& path);

struct ConstructionReport {
    size_t input_count = 0;
    size_t emitted_count = 0;
    size_t dropped_count = 0;
    double drop_rate() const {
        return input_count == 0 ? 0.0 : static_cast<double>(dropped_count) / static_cast<double>(input_count);
    }
};

std::vector<TrainingRecord> build_training_records(const std::vector<SquadSample>& corpus,
                                                   const RelatedWordsDict& dict,
                                                   const Annotator& annotator,
                                                   ConstructionReport* report = nullptr);

// Splits paragraph text into sentences and returns the one covering the
// character offset, with its starting offset in the paragraph.
std::pair<std::string, int> sentence_containing(const std::string& paragraph, int char_offset);

// Aligns a labeled answer to the candidate chunk with maximal token
// overlap, requiring >= 50% overlap in both directions.
std::optional<Chunk> align_answer(const AnnotatedSentence& sentence, int answer_begin_char,
                                  int answer_end_char);

// Line-delimited record files.
void save_records(const std::vector<TrainingRecord>& records, const std::string& path);
std::vector<TrainingRecord> load_records(const std::string& path);
std::string record_to_json(const TrainingRecord& r);
TrainingRecord record_from_json(const std::string& line);

} // namespace acsqg
