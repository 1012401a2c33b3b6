#include "acsqg/sampler.hpp"

#include <set>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "acsqg/errors.hpp"

namespace acsqg {

using json = nlohmann::json;

int BinSpec::bin_of(double value) const {
    if (bin_count < 1) throw InvalidInput("BinSpec: bin_count must be >= 1");
    if (value < 0) value = 0;
    if (value >= max_value) return bin_count - 1;
    int b = static_cast<int>(value / (max_value / bin_count));
    return std::min(b, bin_count - 1);
}

double Rng::next_double() {
    // 53 random mantissa bits, uniform in [0, 1)
    return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
}

double SamplerModel::answer_weight(const std::string& pos, const std::string& ner,
                                   int length) const {
    const auto key = std::make_tuple(pos, ner, answer_bins.bin_of(length));
    auto it = answer_counts.find(key);
    const double count = it == answer_counts.end() ? 0.0 : it->second;
    const double keys = static_cast<double>(answer_counts.size()) + 1.0;
    return (count + smoothing) / (answer_total + smoothing * keys);
}

std::array<double, kStyleCount> SamplerModel::style_row(const std::string& pos,
                                                        const std::string& ner) const {
    std::array<double, kStyleCount> counts{};
    auto it = style_counts.find({pos, ner});
    if (it != style_counts.end()) counts = it->second;
    double total = 0;
    for (double c : counts) total += c;
    std::array<double, kStyleCount> row{};
    for (int s = 0; s < kStyleCount; ++s)
        row[static_cast<size_t>(s)] =
            (counts[static_cast<size_t>(s)] + smoothing) / (total + smoothing * kStyleCount);
    return row;
}

double SamplerModel::clue_weight(const std::string& pos, const std::string& ner,
                                 int dep_dist) const {
    const auto key = std::make_tuple(pos, ner, clue_bins.bin_of(dep_dist));
    auto it = clue_counts.find(key);
    const double count = it == clue_counts.end() ? 0.0 : it->second;
    const double keys = static_cast<double>(clue_counts.size()) + 1.0;
    return (count + smoothing) / (clue_total + smoothing * keys);
}

std::array<double, kStyleCount> SamplerModel::style_marginal() const {
    std::array<double, kStyleCount> total{};
    double sum = 0;
    for (const auto& [key, counts] : style_counts)
        for (int s = 0; s < kStyleCount; ++s) {
            total[static_cast<size_t>(s)] += counts[static_cast<size_t>(s)];
            sum += counts[static_cast<size_t>(s)];
        }
    if (sum > 0)
        for (double& v : total) v /= sum;
    return total;
}

SamplerModel learn_distributions(const std::vector<TrainingRecord>& records, double smoothing) {
    if (records.empty()) throw InvalidInput("learn_distributions: no records");
    SamplerModel m;
    m.smoothing = smoothing;
    for (const TrainingRecord& r : records) {
        m.answer_counts[{r.answer.pos, r.answer.ner, m.answer_bins.bin_of(r.answer.length())}] += 1;
        m.answer_total += 1;
        auto& row = m.style_counts[{r.answer.pos, r.answer.ner}];
        row[static_cast<size_t>(r.style)] += 1;
        const int dist = dependency_distance(r.passage, r.clue.start, r.answer.start);
        m.clue_counts[{r.clue.pos, r.clue.ner, m.clue_bins.bin_of(dist)}] += 1;
        m.clue_total += 1;
    }
    return m;
}

namespace {

size_t draw_index(const std::vector<double>& weights, Rng& rng) {
    double total = 0;
    for (double w : weights) total += w;
    if (total <= 0) throw InvalidInput("draw_index: no positive weight");
    std::vector<double> probs(weights.size());
    double check = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        probs[i] = weights[i] / total;
        check += probs[i];
    }
    if (std::abs(check - 1.0) > 1e-9)
        throw ModelError("normalized draw distribution does not sum to 1");
    const double u = rng.next_double();
    double acc = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

} // namespace

Chunk sample_answer(const AnnotatedSentence& sentence, const SamplerModel& model, Rng& rng) {
    if (sentence.chunks.empty()) throw InvalidInput("sample_answer: no candidate chunks");
    std::vector<double> weights;
    weights.reserve(sentence.chunks.size());
    for (const Chunk& c : sentence.chunks)
        weights.push_back(model.answer_weight(c.pos, c.ner, c.length()));
    return sentence.chunks[draw_index(weights, rng)];
}

Style sample_style(const Chunk& answer, const SamplerModel& model, Rng& rng) {
    auto row = model.style_row(answer.pos, answer.ner);
    std::vector<double> weights(row.begin(), row.end());
    return all_styles()[draw_index(weights, rng)];
}

Chunk sample_clue(const AnnotatedSentence& sentence, const Chunk& answer,
                  const SamplerModel& model, Rng& rng) {
    if (sentence.chunks.empty()) throw InvalidInput("sample_clue: no candidate chunks");
    std::vector<double> weights;
    weights.reserve(sentence.chunks.size());
    for (const Chunk& c : sentence.chunks) {
        const int dist = dependency_distance(sentence, c.start, answer.start);
        weights.push_back(model.clue_weight(c.pos, c.ner, dist));
    }
    return sentence.chunks[draw_index(weights, rng)];
}

std::vector<GenerationInput> sample_inputs(const AnnotatedSentence& sentence,
                                           const SamplerModel& model, Rng& rng,
                                           const SampleOptions& options) {
    std::vector<GenerationInput> out;
    if (sentence.chunks.empty()) return out;

    // answers: without replacement over the candidate pool
    std::vector<Chunk> pool = sentence.chunks;
    std::vector<Chunk> answers;
    while (static_cast<int>(answers.size()) < options.n_answers && !pool.empty()) {
        std::vector<double> weights;
        for (const Chunk& c : pool) weights.push_back(model.answer_weight(c.pos, c.ner, c.length()));
        size_t pick = draw_index(weights, rng);
        answers.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<long>(pick));
    }

    std::set<std::tuple<int, int, int, int, int>> seen; // (a.start,a.end,c.start,c.end,style)
    for (const Chunk& answer : answers) {
        // styles without replacement
        auto row = model.style_row(answer.pos, answer.ner);
        std::vector<Style> style_pool = all_styles();
        std::vector<double> style_weights(row.begin(), row.end());
        std::vector<Style> styles;
        while (static_cast<int>(styles.size()) < options.n_styles && !style_pool.empty()) {
            size_t pick = draw_index(style_weights, rng);
            styles.push_back(style_pool[pick]);
            style_pool.erase(style_pool.begin() + static_cast<long>(pick));
            style_weights.erase(style_weights.begin() + static_cast<long>(pick));
        }
        // clues without replacement
        std::vector<Chunk> clue_pool;
        for (const Chunk& c : sentence.chunks)
            if (options.allow_clue_equals_answer || !(c == answer)) clue_pool.push_back(c);
        std::vector<Chunk> clues;
        while (static_cast<int>(clues.size()) < options.n_clues && !clue_pool.empty()) {
            std::vector<double> weights;
            for (const Chunk& c : clue_pool) {
                const int dist = dependency_distance(sentence, c.start, answer.start);
                weights.push_back(model.clue_weight(c.pos, c.ner, dist));
            }
            size_t pick = draw_index(weights, rng);
            clues.push_back(clue_pool[pick]);
            clue_pool.erase(clue_pool.begin() + static_cast<long>(pick));
        }
        for (Style s : styles) {
            for (const Chunk& clue : clues) {
                auto key = std::make_tuple(answer.start, answer.end, clue.start, clue.end,
                                           static_cast<int>(s));
                if (!seen.insert(key).second) continue;
                GenerationInput gi;
                gi.sentence = sentence;
                gi.answer = answer;
                gi.clue = clue;
                gi.style = s;
                out.push_back(std::move(gi));
            }
        }
    }
    return out;
}

// --- persistence ----------------------------------------------------------

void save_sampler_model(const SamplerModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ResourceError("cannot write: " + path);
    out.precision(17);
    out << "# sampler-model v1\n";
    out << "smoothing " << m.smoothing << "\n";
    out << "answer_bins " << m.answer_bins.max_value << " " << m.answer_bins.bin_count << "\n";
    out << "clue_bins " << m.clue_bins.max_value << " " << m.clue_bins.bin_count << "\n";
    for (const auto& [key, count] : m.answer_counts)
        out << "answer " << std::get<0>(key) << " " << std::get<1>(key) << " "
            << std::get<2>(key) << " " << count << "\n";
    for (const auto& [key, row] : m.style_counts) {
        out << "style " << key.first << " " << key.second;
        for (double c : row) out << " " << c;
        out << "\n";
    }
    for (const auto& [key, count] : m.clue_counts)
        out << "clue " << std::get<0>(key) << " " << std::get<1>(key) << " "
            << std::get<2>(key) << " " << count << "\n";
}

SamplerModel load_sampler_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot read: " + path);
    SamplerModel m;
    std::string line;
    bool versioned = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("sampler-model v1") != std::string::npos) versioned = true;
            continue;
        }
        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "smoothing") {
            ss >> m.smoothing;
        } else if (kind == "answer_bins") {
            ss >> m.answer_bins.max_value >> m.answer_bins.bin_count;
        } else if (kind == "clue_bins") {
            ss >> m.clue_bins.max_value >> m.clue_bins.bin_count;
        } else if (kind == "answer" || kind == "clue") {
            std::string pos, ner;
            int bin;
            double count;
            ss >> pos >> ner >> bin >> count;
            if (kind == "answer") {
                m.answer_counts[{pos, ner, bin}] += count;
                m.answer_total += count;
            } else {
                m.clue_counts[{pos, ner, bin}] += count;
                m.clue_total += count;
            }
        } else if (kind == "style") {
            std::string pos, ner;
            ss >> pos >> ner;
            std::array<double, kStyleCount> row{};
            for (int s = 0; s < kStyleCount; ++s) ss >> row[static_cast<size_t>(s)];
            m.style_counts[{pos, ner}] = row;
        } else {
            throw FormatError("unknown sampler model line: " + line);
        }
    }
    if (!versioned) throw FormatError("missing sampler-model version header: " + path);
    return m;
}

std::string generation_input_to_json(const GenerationInput& input) {
    json j;
    j["sentence"] = json::parse(sentence_to_json(input.sentence));
    j["answer"] = {{"start", input.answer.start}, {"end", input.answer.end},
                   {"text", input.answer.text}};
    j["clue"] = {{"start", input.clue.start}, {"end", input.clue.end}, {"text", input.clue.text}};
    j["style"] = style_name(input.style);
    return j.dump();
}

GenerationInput generation_input_from_json(const std::string& line) {
    json j = json::parse(line);
    GenerationInput gi;
    gi.sentence = sentence_from_json(j.at("sentence").dump());
    auto chunk_of = [&](const json& cj) {
        Chunk c;
        c.start = cj.at("start").get<int>();
        c.end = cj.at("end").get<int>();
        c.text = cj.at("text").get<std::string>();
        for (const Chunk& cand : gi.sentence.chunks)
            if (cand.start == c.start && cand.end == c.end) return cand;
        return c;
    };
    gi.answer = chunk_of(j.at("answer"));
    gi.clue = chunk_of(j.at("clue"));
    auto style = style_from_name(j.at("style").get<std::string>());
    if (!style) throw FormatError("unknown style in input line");
    gi.style = *style;
    return gi;
}

} // namespace acsqg
