#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace acsqg {

struct SpanRef {
    int start = 0; // character offset into passage_text
    int end = 0;
    std::string text;
};

struct FilterVerdict {
    bool kept = false;
    std::string reason; // "entailment" | "span-f1" | "undecided" | ""
    bool entailment = false;
    std::optional<double> span_f1; // present iff entailment passed
};

struct GeneratedSample {
    std::string passage_text;
    std::string question;
    SpanRef answer_span;
    std::string generator; // "s2s" | "lm"
    std::string style;
    std::string clue_text;
    std::optional<FilterVerdict> filter_verdict;
};

class EntailmentAdapter {
public:
    virtual ~EntailmentAdapter() = default;
    // premise = passage, hypothesis = question-answer concatenation
    virtual bool entails(const std::string& passage, const std::string& question,
                         const std::string& answer) const = 0;
};

class QaAdapter {
public:
    virtual ~QaAdapter() = default;
    // answer_hint carries the sample's gold answer text; pretrained
    // adapters ignore it, the bundled stub echoes its first occurrence.
    virtual std::optional<SpanRef> predict_answer(const std::string& passage,
                                                  const std::string& question,
                                                  const std::string* answer_hint = nullptr) const = 0;
};

// Rule-based stand-ins so the whole pipeline and test suite run without
// any pretrained download; real adapters are drop-in replacements.
class StubEntailmentAdapter : public EntailmentAdapter {
public:
    bool entails(const std::string& passage, const std::string& question,
                 const std::string& answer) const override;
};

class StubQaAdapter : public QaAdapter {
public:
    std::optional<SpanRef> predict_answer(const std::string& passage, const std::string& question,
                                          const std::string* answer_hint) const override;
};

// Multiset token-overlap F1 after extractive-QA normalization.
double span_f1(const std::string& gold, const std::string& predicted);

GeneratedSample filter(GeneratedSample sample, const EntailmentAdapter& ent, const QaAdapter& qa,
                       double threshold = 0.9);

struct FilterReport {
    size_t input_count = 0;
    size_t kept_count = 0;
    size_t dropped_count = 0;
    size_t undecided_count = 0;
    size_t dropped_entailment = 0;
    size_t dropped_span_f1 = 0;
    std::map<std::string, size_t> kept_by_generator;
    double keep_rate() const {
        return input_count == 0 ? 0.0
                                : static_cast<double>(kept_count) / static_cast<double>(input_count);
    }
};

std::tuple<std::vector<GeneratedSample>, std::vector<GeneratedSample>, FilterReport> filter_batch(
    const std::vector<GeneratedSample>& samples, const EntailmentAdapter& ent, const QaAdapter& qa,
    double threshold = 0.9);

std::string generated_sample_to_json(const GeneratedSample& s);
GeneratedSample generated_sample_from_json(const std::string& line);
void save_generated_samples(const std::vector<GeneratedSample>& samples, const std::string& path);
std::vector<GeneratedSample> load_generated_samples(const std::string& path);

} // namespace acsqg
