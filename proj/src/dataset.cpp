#include "acsqg/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "acsqg/errors.hpp"
#include "acsqg/text.hpp"

namespace acsqg {

using json = nlohmann::json;

std::string style_name(Style s) {
    switch (s) {
        case Style::Who: return "who";
        case Style::Where: return "where";
        case Style::When: return "when";
        case Style::Why: return "why";
        case Style::Which: return "which";
        case Style::What: return "what";
        case Style::How: return "how";
        case Style::YesNo: return "yes-no";
        case Style::Other: return "other";
    }
    return "other";
}

std::optional<Style> style_from_name(const std::string& name) {
    for (Style s : all_styles())
        if (style_name(s) == name) return s;
    return std::nullopt;
}

const std::vector<Style>& all_styles() {
    static const std::vector<Style> styles = {
        Style::Who, Style::Where, Style::When, Style::Why, Style::Which,
        Style::What, Style::How, Style::YesNo, Style::Other,
    };
    return styles;
}

Style classify_style(const std::string& question) {
    std::vector<std::string> toks = text::tokenize(text::lowercase(question));
    if (toks.empty()) throw InvalidInput("classify_style: empty question");
    std::set<std::string> tokset(toks.begin(), toks.end());

    static const std::vector<std::pair<std::string, Style>> ordered = {
        {"who", Style::Who},   {"where", Style::Where}, {"when", Style::When},
        {"why", Style::Why},   {"which", Style::Which}, {"what", Style::What},
        {"how", Style::How},
    };
    // a question-initial interrogative word wins outright; this keeps
    // "How old was Selina when she left?" in the how class even though
    // "when" precedes "how" in the containment order
    for (const auto& [word, style] : ordered)
        if (toks.front() == word) return style;
    for (const auto& [word, style] : ordered)
        if (tokset.count(word)) return style;

    static const std::set<std::string> yes_no_leads = {
        "am", "is", "was", "were", "are", "does", "do", "did", "have", "had",
        "has", "could", "can", "shall", "should", "will", "would", "may", "might",
    };
    if (yes_no_leads.count(toks.front())) return Style::YesNo;
    return Style::Other;
}

namespace {

std::string squash_ws_lower(const std::string& s) {
    std::string out;
    bool in_space = true;
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(c)));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

size_t multiset_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::map<std::string, int> counts;
    for (const std::string& w : b) ++counts[w];
    size_t n = 0;
    for (const std::string& w : a) {
        auto it = counts.find(w);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++n;
        }
    }
    return n;
}

} // namespace

std::pair<Chunk, std::vector<ClueScore>> extract_clue(const AnnotatedSentence& passage,
                                                      const std::string& question,
                                                      const Chunk& /*answer*/,
                                                      const RelatedWordsDict& dict) {
    if (passage.chunks.empty()) throw InvalidInput("extract_clue: no candidate chunks");

    // question content tokens and stems, lowercased
    std::vector<std::string> q_tokens, q_stems;
    for (const std::string& tok : text::tokenize(question)) {
        const std::string low = text::lowercase(tok);
        if (text::is_punctuation(tok) || text::is_stopword(low)) continue;
        q_tokens.push_back(low);
        q_stems.push_back(text::stem(low));
    }
    const std::string q_norm = squash_ws_lower(question);

    std::vector<ClueScore> table;
    for (const Chunk& c : passage.chunks) {
        std::vector<std::string> c_tokens, c_stems;
        for (int k = c.start; k < c.end; ++k) {
            const Token& t = passage.tokens[static_cast<size_t>(k)];
            if (!t.is_content) continue;
            c_tokens.push_back(text::lowercase(t.text));
            c_stems.push_back(text::stem(t.text));
        }
        ClueScore score;
        score.chunk = c;
        score.token_overlap = static_cast<int>(multiset_overlap(c_tokens, q_tokens));
        score.stem_overlap = static_cast<int>(multiset_overlap(c_stems, q_stems));
        int soft = 0;
        for (const std::string& cw : c_tokens)
            for (const std::string& qw : q_tokens)
                if (is_soft_copy(qw, cw, dict)) {
                    ++soft;
                    break;
                }
        score.soft_copy_overlap = soft;
        score.contained = q_norm.find(squash_ws_lower(c.text)) != std::string::npos ? 1 : 0;
        score.total = score.token_overlap + score.stem_overlap + score.soft_copy_overlap +
                      score.contained;
        table.push_back(std::move(score));
    }

    const ClueScore* best = &table.front();
    for (const ClueScore& s : table) {
        if (s.total > best->total) best = &s;
        else if (s.total == best->total) {
            if (s.chunk.start < best->chunk.start ||
                (s.chunk.start == best->chunk.start && s.chunk.length() < best->chunk.length()))
                best = &s;
        }
    }
    return {best->chunk, table};
}

std::pair<std::string, int> sentence_containing(const std::string& paragraph, int char_offset) {
    const int n = static_cast<int>(paragraph.size());
    int start = 0;
    for (int i = 0; i < n; ++i) {
        char c = paragraph[static_cast<size_t>(i)];
        bool boundary = (c == '.' || c == '?' || c == '!') &&
                        (i + 1 >= n || std::isspace(static_cast<unsigned char>(paragraph[static_cast<size_t>(i + 1)])));
        if (boundary || i == n - 1) {
            int end = i + 1;
            if (char_offset >= start && char_offset < end) {
                int s = start;
                while (s < end && std::isspace(static_cast<unsigned char>(paragraph[static_cast<size_t>(s)]))) ++s;
                return {paragraph.substr(static_cast<size_t>(s), static_cast<size_t>(end - s)), s};
            }
            start = end;
        }
    }
    return {paragraph, 0};
}

std::optional<Chunk> align_answer(const AnnotatedSentence& sentence, int answer_begin_char,
                                  int answer_end_char) {
    // token indices overlapping the answer character span
    std::set<int> answer_tokens;
    for (const Token& t : sentence.tokens)
        if (t.begin_char < answer_end_char && t.end_char > answer_begin_char)
            answer_tokens.insert(t.index);
    if (answer_tokens.empty()) return std::nullopt;

    const Chunk* best = nullptr;
    int best_overlap = 0;
    for (const Chunk& c : sentence.chunks) {
        int overlap = 0;
        for (int k = c.start; k < c.end; ++k)
            if (answer_tokens.count(k)) ++overlap;
        if (overlap * 2 < c.length()) continue;                              // >= 50% of chunk
        if (overlap * 2 < static_cast<int>(answer_tokens.size())) continue;  // >= 50% of answer
        if (overlap > best_overlap ||
            (overlap == best_overlap && best && (c.start < best->start ||
             (c.start == best->start && c.length() < best->length())))) {
            best = &c;
            best_overlap = overlap;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

std::vector<SquadSample> load_squad(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open corpus file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed corpus file: ") + e.what());
    }
    std::vector<SquadSample> out;
    try {
        for (const json& article : j.at("data")) {
            for (const json& para : article.at("paragraphs")) {
                const std::string context = para.at("context").get<std::string>();
                for (const json& qa : para.at("qas")) {
                    if (!qa.contains("answers") || qa.at("answers").empty()) continue;
                    const json& ans = qa.at("answers").front();
                    SquadSample s;
                    s.context = context;
                    s.question = qa.at("question").get<std::string>();
                    s.answer_text = ans.at("text").get<std::string>();
                    s.answer_start = ans.at("answer_start").get<int>();
                    s.id = qa.value("id", "");
                    out.push_back(std::move(s));
                }
            }
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("unexpected corpus schema: ") + e.what());
    }
    return out;
}

std::vector<TrainingRecord> build_training_records(const std::vector<SquadSample>& corpus,
                                                   const RelatedWordsDict& dict,
                                                   const Annotator& annotator,
                                                   ConstructionReport* report) {
    std::vector<TrainingRecord> records;
    size_t dropped = 0;
    for (const SquadSample& sample : corpus) {
        try {
            auto [sent_text, sent_offset] = sentence_containing(sample.context, sample.answer_start);
            const int local_begin = sample.answer_start - sent_offset;
            const int local_end = local_begin + static_cast<int>(sample.answer_text.size());
            if (local_begin < 0 || local_end > static_cast<int>(sent_text.size())) {
                ++dropped;
                continue;
            }
            AnnotatedSentence sentence = annotator.annotate(sent_text);
            sentence.paragraph_id = sample.id;
            std::optional<Chunk> answer = align_answer(sentence, local_begin, local_end);
            if (!answer) {
                ++dropped;
                continue;
            }
            auto [clue, table] = extract_clue(sentence, sample.question, *answer, dict);
            TrainingRecord r;
            r.passage = std::move(sentence);
            r.question = sample.question;
            r.answer = *answer;
            r.clue = clue;
            r.style = classify_style(sample.question);
            r.source_id = sample.id;
            records.push_back(std::move(r));
        } catch (const InvalidInput&) {
            ++dropped;
        } catch (const AnnotationError&) {
            ++dropped;
        }
    }
    if (report) {
        report->input_count = corpus.size();
        report->emitted_count = records.size();
        report->dropped_count = dropped;
    }
    return records;
}

std::string record_to_json(const TrainingRecord& r) {
    json j;
    j["passage"] = json::parse(sentence_to_json(r.passage));
    j["passage_text"] = r.passage.raw_text;
    j["question"] = r.question;
    j["answer"] = {{"start", r.answer.start}, {"end", r.answer.end}, {"text", r.answer.text}};
    j["clue"] = {{"start", r.clue.start}, {"end", r.clue.end}, {"text", r.clue.text}};
    j["style"] = style_name(r.style);
    j["source_id"] = r.source_id;
    return j.dump();
}

TrainingRecord record_from_json(const std::string& line) {
    json j = json::parse(line);
    TrainingRecord r;
    r.passage = sentence_from_json(j.at("passage").dump());
    r.question = j.at("question").get<std::string>();
    auto chunk_of = [&](const json& cj) {
        Chunk c;
        c.start = cj.at("start").get<int>();
        c.end = cj.at("end").get<int>();
        c.text = cj.at("text").get<std::string>();
        for (const Chunk& cand : r.passage.chunks)
            if (cand.start == c.start && cand.end == c.end) return cand;
        return c;
    };
    r.answer = chunk_of(j.at("answer"));
    r.clue = chunk_of(j.at("clue"));
    auto style = style_from_name(j.at("style").get<std::string>());
    if (!style) throw FormatError("unknown style in record: " + line.substr(0, 80));
    r.style = *style;
    r.source_id = j.value("source_id", "");
    return r;
}

void save_records(const std::vector<TrainingRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot write: " + path);
    for (const TrainingRecord& r : records) out << record_to_json(r) << "\n";
}

std::vector<TrainingRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot read: " + path);
    std::vector<TrainingRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(line));
    }
    return out;
}

} // namespace acsqg
