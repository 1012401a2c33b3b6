#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace acsqg {

// Key-value pipeline configuration ("key = value" lines, # comments).
struct PipelineConfig {
    // paths
    std::string corpus;        // SQuAD-format JSON
    std::string vectors;       // word-vector text file
    std::string synonyms;      // synonym lines, optional
    std::string sentences;     // one input sentence per line
    std::string reference;     // reference questions for evaluate, optional
    std::string workdir = "out";

    // sampler counts
    int n_answers = 5;
    int n_styles = 2;
    int n_clues = 2;

    // seq2seq hyperparameters (defaults match the trained configuration)
    int s2s_word_dim = 300;
    int s2s_feat_dim = 16;
    int s2s_enc_hidden = 512;
    int s2s_style_dim = 16;
    int s2s_attn_dim = 256;
    int s2s_readout_dim = 512;
    int s2s_vocab_size = 2000;
    int s2s_epochs = 10;
    int s2s_batch_size = 32;
    double s2s_dropout = 0.1;
    int beam_width = 20;
    int max_len = 30;

    // language-model generator
    int lm_epochs = 4;
    int lm_batch = 2;
    double nucleus_p = 0.9;

    std::string backend = "s2s"; // s2s | lm
    double filter_threshold = 0.9;
    std::uint64_t seed = 17;
    int min_sentence_tokens = 5;
    int max_sentence_tokens = 100;
    int max_sentences = 0; // 0 = no cap

    static PipelineConfig from_file(const std::string& path);
    static PipelineConfig from_map(const std::map<std::string, std::string>& kv);
    void validate() const;

    // derived artifact paths inside workdir
    std::string records_path() const { return workdir + "/records.jsonl"; }
    std::string dev_records_path() const { return workdir + "/dev_records.jsonl"; }
    std::string related_words_path() const { return workdir + "/related_words.txt"; }
    std::string sampler_model_path() const { return workdir + "/sampler.model"; }
    std::string inputs_path() const { return workdir + "/inputs.jsonl"; }
    std::string s2s_dir() const { return workdir + "/s2s"; }
    std::string lm_ckpt_path() const { return workdir + "/lm.ckpt"; }
    std::string generated_path() const { return workdir + "/gen.jsonl"; }
    std::string kept_path() const { return workdir + "/kept.jsonl"; }
    std::string dropped_path() const { return workdir + "/dropped.jsonl"; }
    std::string eval_report_path() const { return workdir + "/eval.report"; }
    std::string annotation_cache_path() const { return workdir + "/annotation_cache.jsonl"; }
    std::string report_path(const std::string& stage) const {
        return workdir + "/" + stage + ".report.json";
    }
};

struct StageReport {
    std::string stage;
    std::map<std::string, double> counts;
    double duration_seconds = 0;
    std::uint64_t seed = 0;
};

// Executes one named stage (construct, learn-dist, sample, train-s2s,
// finetune-lm, generate, filter, evaluate). Outputs are written via a
// temp file + rename; a structured report lands next to the artifact.
StageReport run_stage(const std::string& stage_name, const PipelineConfig& config);

std::vector<StageReport> run_all(const PipelineConfig& config);

// temp-file + rename write used by every stage
void atomic_write(const std::string& path, const std::string& contents);

} // namespace acsqg
