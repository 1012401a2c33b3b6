#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "acsqg/annotation.hpp"
#include "acsqg/dataset.hpp"

namespace acsqg {

// Equal-width bins over [0, max_value]; values above the cap clamp to the
// last bin.
struct BinSpec {
    double max_value = 30;
    int bin_count = 10;

    int bin_of(double value) const;
};

struct GenerationInput {
    AnnotatedSentence sentence;
    Chunk answer;
    Chunk clue;
    Style style = Style::What;
};

// Deterministic random stream; the draw path avoids std distribution
// objects so sampled files are reproducible byte for byte.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double next_double(); // uniform in [0, 1)
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// The three binned conditional tables. Counts are stored; probabilities
// are derived with additive smoothing so unseen keys stay positive.
class SamplerModel {
public:
    BinSpec answer_bins{30, 10};
    BinSpec clue_bins{20, 10};
    double smoothing = 0.1;

    // raw counts, exposed for inspection and the text format
    std::map<std::tuple<std::string, std::string, int>, double> answer_counts;
    std::map<std::pair<std::string, std::string>, std::array<double, kStyleCount>> style_counts;
    std::map<std::tuple<std::string, std::string, int>, double> clue_counts;
    double answer_total = 0;
    double clue_total = 0;

    double answer_weight(const std::string& pos, const std::string& ner, int length) const;
    std::array<double, kStyleCount> style_row(const std::string& pos, const std::string& ner) const;
    double clue_weight(const std::string& pos, const std::string& ner, int dep_dist) const;

    // marginal P(style) over all learned rows, count-weighted
    std::array<double, kStyleCount> style_marginal() const;
};

SamplerModel learn_distributions(const std::vector<TrainingRecord>& records,
                                 double smoothing = 0.1);

Chunk sample_answer(const AnnotatedSentence& sentence, const SamplerModel& model, Rng& rng);
Style sample_style(const Chunk& answer, const SamplerModel& model, Rng& rng);
Chunk sample_clue(const AnnotatedSentence& sentence, const Chunk& answer,
                  const SamplerModel& model, Rng& rng);

struct SampleOptions {
    int n_answers = 5;
    int n_styles = 2;
    int n_clues = 2;
    bool allow_clue_equals_answer = true;
};

// Over-generation: up to n_answers x n_styles x n_clues distinct inputs
// per sentence, all drawn without replacement.
std::vector<GenerationInput> sample_inputs(const AnnotatedSentence& sentence,
                                           const SamplerModel& model, Rng& rng,
                                           const SampleOptions& options = {});

void save_sampler_model(const SamplerModel& model, const std::string& path);
SamplerModel load_sampler_model(const std::string& path);

std::string generation_input_to_json(const GenerationInput& input);
GenerationInput generation_input_from_json(const std::string& line);

} // namespace acsqg
