#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "acsqg/autodiff.hpp"
#include "acsqg/dataset.hpp"
#include "acsqg/sampler.hpp"

namespace acsqg {

struct Vocab {
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kSos = 2;
    static constexpr int kEos = 3;
    static constexpr int kReserved = 4;

    std::vector<std::string> id_to_token; // reserved symbols first
    std::unordered_map<std::string, int> token_to_id;

    int size() const { return static_cast<int>(id_to_token.size()); }
    int id_of(const std::string& lowercased_token) const;
};

// Top n_v most frequent tokens (frequency ties resolved lexicographically)
// plus the four reserved symbols.
Vocab reduce_vocabulary(const std::vector<std::string>& corpus_tokens, int n_v);

struct Seq2SeqConfig {
    int word_dim = 300;
    int feat_dim = 16;
    int enc_hidden = 512;
    int style_dim = 16;
    int attn_dim = 256;
    int readout_dim = 512; // r_t width; maxout halves it, must be even
    int vocab_size = 2000; // N_V before reserved symbols
    int max_len = 30;
    double dropout = 0.1;
    double learning_rate = 0.001;
    double beta1 = 0.8;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 32;
    int epochs = 10;
    double clip = 5.0;
    int beam_width = 20;
    std::uint64_t seed = 17;

    int dec_hidden() const { return enc_hidden + style_dim; } // [h_s; s_l]
};

const std::vector<std::string>& pos_tagset();
const std::vector<std::string>& ner_tagset();
int pos_tag_index(const std::string& tag);
int ner_tag_index(const std::string& tag);

// Encoder-decoder question generator: BiGRU encoder over feature-embedded
// tokens, style-initialized GRU decoder, concatenated attention, maxout
// readout and a sigmoid copy gate mixing generation with attention-based
// copying over the source positions.
class Seq2SeqModel {
public:
    Seq2SeqConfig config;
    Vocab vocab;
    std::map<std::string, ad::Mat> params;

    void init_params();

    // ---- inference-facing pieces ----
    // hidden states h_i = [forward; backward], dimension 2 * enc_hidden
    std::vector<Eigen::VectorXd> encode(const GenerationInput& input) const;

    struct DecodeState {
        Eigen::VectorXd hidden;  // s_t
        Eigen::VectorXd context; // c_{t-1}
        std::vector<int> prefix; // emitted mixed symbols
        double log_prob = 0;
    };

    DecodeState init_decoder(Style style, const std::vector<Eigen::VectorXd>& enc_states) const;

    // mixed distribution indexes vocabulary first, then source positions
    struct StepResult {
        Eigen::VectorXd mixed;
        Eigen::VectorXd generation;
        Eigen::VectorXd attention;
        double copy_gate = 0;
        DecodeState next;
    };

    StepResult decode_step(const DecodeState& state, int prev_symbol,
                           const GenerationInput& input,
                           const std::vector<Eigen::VectorXd>& enc_states) const;

    struct Hypothesis {
        std::string text;
        double score; // length-normalized log-probability
    };

    std::vector<Hypothesis> beam_generate(const GenerationInput& input, int beam_width = -1,
                                          int max_len = -1) const;

    // ---- training ----
    struct TrainReport {
        std::vector<double> epoch_train_loss;
        std::vector<double> epoch_dev_loss;
    };

    TrainReport train(const std::vector<TrainingRecord>& train_records,
                      const std::vector<TrainingRecord>& dev_records,
                      const std::string& checkpoint_dir = "");

    double dataset_loss(const std::vector<TrainingRecord>& records) const;
    // teacher-forced argmax accuracy against gold question tokens
    double token_accuracy(const std::vector<TrainingRecord>& records) const;

    // loss graph for one record; grads receives parameter gradients when
    // non-null. dropout_rng == nullptr disables dropout.
    ad::Var build_loss(ad::Tape& tape, const TrainingRecord& record,
                       std::map<std::string, ad::Mat>* grads, Rng* dropout_rng) const;

    void save(const std::string& path) const;
    static Seq2SeqModel load(const std::string& path);

    static GenerationInput input_of_record(const TrainingRecord& record);
};

} // namespace acsqg
