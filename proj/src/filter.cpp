#include "acsqg/filter.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "acsqg/errors.hpp"
#include "acsqg/text.hpp"

namespace acsqg {

using json = nlohmann::json;

bool StubEntailmentAdapter::entails(const std::string& passage, const std::string& /*question*/,
                                    const std::string& answer) const {
    const std::string p = text::lowercase(passage);
    const std::string a = text::lowercase(answer);
    if (a.empty()) return false;
    return p.find(a) != std::string::npos;
}

std::optional<SpanRef> StubQaAdapter::predict_answer(const std::string& passage,
                                                     const std::string& /*question*/,
                                                     const std::string* answer_hint) const {
    if (!answer_hint || answer_hint->empty()) return std::nullopt;
    const std::string p = text::lowercase(passage);
    const std::string a = text::lowercase(*answer_hint);
    const auto at = p.find(a);
    if (at == std::string::npos) return std::nullopt;
    SpanRef span;
    span.start = static_cast<int>(at);
    span.end = static_cast<int>(at + a.size());
    span.text = passage.substr(at, a.size());
    return span;
}

double span_f1(const std::string& gold, const std::string& predicted) {
    std::vector<std::string> g = text::normalize_answer_tokens(gold);
    std::vector<std::string> p = text::normalize_answer_tokens(predicted);
    if (g.empty() && p.empty()) return gold == predicted ? 1.0 : 0.0;
    if (g.empty() || p.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const std::string& w : g) ++counts[w];
    int overlap = 0;
    for (const std::string& w : p) {
        auto it = counts.find(w);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

GeneratedSample filter(GeneratedSample sample, const EntailmentAdapter& ent, const QaAdapter& qa,
                       double threshold) {
    FilterVerdict verdict;
    try {
        verdict.entailment =
            ent.entails(sample.passage_text, sample.question, sample.answer_span.text);
        if (!verdict.entailment) {
            verdict.kept = false;
            verdict.reason = "entailment";
        } else {
            std::optional<SpanRef> predicted =
                qa.predict_answer(sample.passage_text, sample.question, &sample.answer_span.text);
            const double f1 = predicted ? span_f1(sample.answer_span.text, predicted->text) : 0.0;
            verdict.span_f1 = f1;
            if (f1 > threshold) {
                verdict.kept = true;
            } else {
                verdict.kept = false;
                verdict.reason = "span-f1";
            }
        }
    } catch (const std::exception&) {
        verdict.kept = false;
        verdict.reason = "undecided";
    }
    sample.filter_verdict = verdict;
    return sample;
}

std::tuple<std::vector<GeneratedSample>, std::vector<GeneratedSample>, FilterReport> filter_batch(
    const std::vector<GeneratedSample>& samples, const EntailmentAdapter& ent, const QaAdapter& qa,
    double threshold) {
    std::vector<GeneratedSample> kept, dropped;
    FilterReport report;
    report.input_count = samples.size();
    for (const GeneratedSample& s : samples) {
        GeneratedSample judged = filter(s, ent, qa, threshold);
        const FilterVerdict& v = *judged.filter_verdict;
        if (v.kept) {
            ++report.kept_count;
            ++report.kept_by_generator[judged.generator];
            kept.push_back(std::move(judged));
        } else {
            ++report.dropped_count;
            if (v.reason == "entailment") ++report.dropped_entailment;
            else if (v.reason == "span-f1") ++report.dropped_span_f1;
            else ++report.undecided_count;
            dropped.push_back(std::move(judged));
        }
    }
    return {std::move(kept), std::move(dropped), report};
}

std::string generated_sample_to_json(const GeneratedSample& s) {
    json j;
    j["passage_text"] = s.passage_text;
    j["question"] = s.question;
    j["answer"] = {{"start", s.answer_span.start}, {"end", s.answer_span.end},
                   {"text", s.answer_span.text}};
    j["generator"] = s.generator;
    j["style"] = s.style;
    j["clue_text"] = s.clue_text;
    if (s.filter_verdict) {
        const FilterVerdict& v = *s.filter_verdict;
        j["verdict"] = {{"kept", v.kept}, {"reason", v.reason}, {"entailment", v.entailment}};
        if (v.span_f1) j["verdict"]["span_f1"] = *v.span_f1;
    }
    return j.dump();
}

GeneratedSample generated_sample_from_json(const std::string& line) {
    json j = json::parse(line);
    GeneratedSample s;
    s.passage_text = j.at("passage_text").get<std::string>();
    s.question = j.at("question").get<std::string>();
    s.answer_span.start = j.at("answer").at("start").get<int>();
    s.answer_span.end = j.at("answer").at("end").get<int>();
    s.answer_span.text = j.at("answer").at("text").get<std::string>();
    s.generator = j.value("generator", "");
    s.style = j.value("style", "");
    s.clue_text = j.value("clue_text", "");
    if (j.contains("verdict")) {
        FilterVerdict v;
        v.kept = j["verdict"].at("kept").get<bool>();
        v.reason = j["verdict"].value("reason", "");
        v.entailment = j["verdict"].value("entailment", false);
        if (j["verdict"].contains("span_f1")) v.span_f1 = j["verdict"]["span_f1"].get<double>();
        s.filter_verdict = v;
    }
    return s;
}

void save_generated_samples(const std::vector<GeneratedSample>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot write: " + path);
    for (const GeneratedSample& s : samples) out << generated_sample_to_json(s) << "\n";
}

std::vector<GeneratedSample> load_generated_samples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot read: " + path);
    std::vector<GeneratedSample> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(generated_sample_from_json(line));
    return out;
}

} // namespace acsqg
