#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "acsqg/dataset.hpp"
#include "acsqg/sampler.hpp"

namespace acsqg {

enum class Segment { Passage, Clue, Answer, Style, Question };

// Word-level tokenizer whose five markers round-trip as atomic tokens.
class LmTokenizer {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kClue = 3;
    static constexpr int kAns = 4;
    static constexpr int kStyle = 5;
    static constexpr int kQues = 6;
    static constexpr int kEos = 7;
    static constexpr int kSpecialCount = 8;

    LmTokenizer();

    int id_of(const std::string& token) const; // kUnk when absent
    int add(const std::string& token);         // idempotent
    const std::string& token_of(int id) const;
    int size() const { return static_cast<int>(id_to_token_.size()); }
    bool is_marker(int id) const { return id >= kBos && id <= kEos; }

    std::vector<std::string> id_to_token() const { return id_to_token_; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

struct PromptSequence {
    std::vector<int> token_ids;
    std::vector<Segment> segments;
    bool has_target = false; // question + <eos> appended (training mode)
};

// "<bos> passage <clue> clue <ans> answer <style> style <ques> [question <eos>]"
// Passage tokens inside the answer span carry the answer segment; inside
// the clue span, the clue segment. max_context > 0 right-truncates the
// passage region only.
PromptSequence serialize_prompt(const GenerationInput& input,
                                const std::string* question, LmTokenizer& tokenizer,
                                int max_context = 0);

struct PromptParts {
    std::vector<std::string> passage;
    std::vector<std::string> clue;
    std::vector<std::string> answer;
    std::string style;
    std::vector<std::string> question; // empty in generation mode
};

PromptParts deserialize_prompt(const PromptSequence& seq, const LmTokenizer& tokenizer);

// Pretrained/trainable autoregressive LM behind the generation interface.
class LmAdapter {
public:
    virtual ~LmAdapter() = default;
    virtual LmTokenizer& tokenizer() = 0;
    virtual const LmTokenizer& tokenizer() const = 0;
    virtual int max_context() const = 0;
    // distribution over the tokenizer vocabulary for the next token
    virtual Eigen::VectorXd next_token_distribution(const PromptSequence& prefix) const = 0;
    // one optimizer update over a batch; returns mean question-region loss
    virtual double train_batch(const std::vector<PromptSequence>& batch) = 0;
};

// Causal-LM fine-tuning on serialized records; loss is restricted to the
// region from <ques> onward.
struct FinetuneReport {
    std::vector<double> epoch_loss;
};

FinetuneReport finetune(const std::vector<TrainingRecord>& records, LmAdapter& lm,
                        int epochs = 4, int batch = 2);

// Smallest top-probability index set with mass >= p, by descending
// probability. Minimal: dropping its least member would fall below p.
std::vector<int> nucleus_set(const Eigen::VectorXd& probs, double p);
int nucleus_sample(const Eigen::VectorXd& probs, double p, Rng& rng);

std::string nucleus_generate(const GenerationInput& input, const LmAdapter& lm, double p,
                             int max_len, Rng& rng);

// Bundled small GRU language model with token + segment embeddings. Stands
// in for an external pretrained checkpoint so the full pipeline and tests
// run offline; a real pretrained adapter is a drop-in replacement.
class TinyGruLm : public LmAdapter {
public:
    struct Config {
        int embed_dim = 32;
        int hidden = 64;
        double learning_rate = 0.01;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
        int max_context = 256;
        std::uint64_t seed = 17;
    };

    TinyGruLm() : TinyGruLm(Config()) {}
    explicit TinyGruLm(Config config);

    LmTokenizer& tokenizer() override { return tokenizer_; }
    const LmTokenizer& tokenizer() const override { return tokenizer_; }
    int max_context() const override { return config_.max_context; }
    Eigen::VectorXd next_token_distribution(const PromptSequence& prefix) const override;
    double train_batch(const std::vector<PromptSequence>& batch) override;

    // grow embeddings/output after tokenizer additions
    void sync_vocab();

    void save(const std::string& path) const;
    static std::unique_ptr<TinyGruLm> load(const std::string& path);

private:
    struct Impl;
    Config config_;
    LmTokenizer tokenizer_;
    std::shared_ptr<Impl> impl_;
};

} // namespace acsqg
