#include "acsqg/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "acsqg/annotation.hpp"
#include "acsqg/dataset.hpp"
#include "acsqg/errors.hpp"
#include "acsqg/filter.hpp"
#include "acsqg/lm.hpp"
#include "acsqg/metrics.hpp"
#include "acsqg/related_words.hpp"
#include "acsqg/sampler.hpp"
#include "acsqg/seq2seq.hpp"
#include "acsqg/text.hpp"

namespace acsqg {

namespace fs = std::filesystem;
using json = nlohmann::json;

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ResourceError("cannot write: " + tmp);
        out << contents;
    }
    fs::rename(tmp, path);
}

PipelineConfig PipelineConfig::from_map(const std::map<std::string, std::string>& kv) {
    PipelineConfig c;
    auto get = [&](const std::string& key, auto& field) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        using T = std::decay_t<decltype(field)>;
        if constexpr (std::is_same_v<T, std::string>) field = it->second;
        else if constexpr (std::is_same_v<T, double>) field = std::stod(it->second);
        else if constexpr (std::is_same_v<T, std::uint64_t>) field = std::stoull(it->second);
        else field = std::stoi(it->second);
    };
    get("corpus", c.corpus);
    get("vectors", c.vectors);
    get("synonyms", c.synonyms);
    get("sentences", c.sentences);
    get("reference", c.reference);
    get("workdir", c.workdir);
    get("n_answers", c.n_answers);
    get("n_styles", c.n_styles);
    get("n_clues", c.n_clues);
    get("s2s_word_dim", c.s2s_word_dim);
    get("s2s_feat_dim", c.s2s_feat_dim);
    get("s2s_enc_hidden", c.s2s_enc_hidden);
    get("s2s_style_dim", c.s2s_style_dim);
    get("s2s_attn_dim", c.s2s_attn_dim);
    get("s2s_readout_dim", c.s2s_readout_dim);
    get("s2s_vocab_size", c.s2s_vocab_size);
    get("s2s_epochs", c.s2s_epochs);
    get("s2s_batch_size", c.s2s_batch_size);
    get("s2s_dropout", c.s2s_dropout);
    get("beam_width", c.beam_width);
    get("max_len", c.max_len);
    get("lm_epochs", c.lm_epochs);
    get("lm_batch", c.lm_batch);
    get("nucleus_p", c.nucleus_p);
    get("backend", c.backend);
    get("filter_threshold", c.filter_threshold);
    get("seed", c.seed);
    get("min_sentence_tokens", c.min_sentence_tokens);
    get("max_sentence_tokens", c.max_sentence_tokens);
    get("max_sentences", c.max_sentences);
    return c;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot read config: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
            return s;
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return from_map(kv);
}

void PipelineConfig::validate() const {
    if (n_answers < 1 || n_styles < 1 || n_clues < 1)
        throw InvalidInput("config: sampler counts must be positive");
    if (backend != "s2s" && backend != "lm")
        throw InvalidInput("config: backend must be s2s or lm");
    if (filter_threshold < 0 || filter_threshold > 1)
        throw InvalidInput("config: filter_threshold must be in [0,1]");
}

namespace {

void require_file(const std::string& path, const std::string& what) {
    if (path.empty() || !fs::exists(path))
        throw DependencyError("missing " + what + ": " + (path.empty() ? "<unset>" : path));
}

std::string jsonl_of_records(const std::vector<TrainingRecord>& records) {
    std::string out;
    for (const TrainingRecord& r : records) {
        out += record_to_json(r);
        out += "\n";
    }
    return out;
}

Seq2SeqConfig s2s_config_of(const PipelineConfig& c) {
    Seq2SeqConfig sc;
    sc.word_dim = c.s2s_word_dim;
    sc.feat_dim = c.s2s_feat_dim;
    sc.enc_hidden = c.s2s_enc_hidden;
    sc.style_dim = c.s2s_style_dim;
    sc.attn_dim = c.s2s_attn_dim;
    sc.readout_dim = c.s2s_readout_dim;
    sc.vocab_size = c.s2s_vocab_size;
    sc.epochs = c.s2s_epochs;
    sc.batch_size = c.s2s_batch_size;
    sc.dropout = c.s2s_dropout;
    sc.beam_width = c.beam_width;
    sc.max_len = c.max_len;
    sc.seed = c.seed;
    return sc;
}

StageReport stage_construct(const PipelineConfig& c) {
    require_file(c.corpus, "corpus file");
    require_file(c.vectors, "word-vector file");
    StageReport report{.stage = "construct", .seed = c.seed};

    RelatedWordsDict dict = build_related_words(c.vectors, c.synonyms, 5);
    save_related_words(dict, c.related_words_path() + ".tmp");
    fs::rename(c.related_words_path() + ".tmp", c.related_words_path());

    Annotator annotator(c.annotation_cache_path());
    std::vector<SquadSample> corpus = load_squad(c.corpus);
    ConstructionReport cr;
    std::vector<TrainingRecord> records = build_training_records(corpus, dict, annotator, &cr);

    // deterministic 90/10 train/dev split by position
    const size_t dev_from = records.size() - records.size() / 10;
    std::vector<TrainingRecord> train(records.begin(), records.begin() + static_cast<long>(dev_from));
    std::vector<TrainingRecord> dev(records.begin() + static_cast<long>(dev_from), records.end());
    atomic_write(c.records_path(), jsonl_of_records(train));
    atomic_write(c.dev_records_path(), jsonl_of_records(dev));

    report.counts["input_samples"] = static_cast<double>(cr.input_count);
    report.counts["emitted_records"] = static_cast<double>(cr.emitted_count);
    report.counts["dropped_records"] = static_cast<double>(cr.dropped_count);
    report.counts["drop_rate"] = cr.drop_rate();
    report.counts["train_records"] = static_cast<double>(train.size());
    report.counts["dev_records"] = static_cast<double>(dev.size());
    return report;
}

StageReport stage_learn_dist(const PipelineConfig& c) {
    require_file(c.records_path(), "training records (run construct first)");
    StageReport report{.stage = "learn-dist", .seed = c.seed};
    std::vector<TrainingRecord> records = load_records(c.records_path());
    SamplerModel model = learn_distributions(records);
    save_sampler_model(model, c.sampler_model_path() + ".tmp");
    fs::rename(c.sampler_model_path() + ".tmp", c.sampler_model_path());
    report.counts["records"] = static_cast<double>(records.size());
    report.counts["answer_keys"] = static_cast<double>(model.answer_counts.size());
    report.counts["style_keys"] = static_cast<double>(model.style_counts.size());
    report.counts["clue_keys"] = static_cast<double>(model.clue_counts.size());
    return report;
}

StageReport stage_sample(const PipelineConfig& c) {
    require_file(c.sampler_model_path(), "sampler model (run learn-dist first)");
    require_file(c.sentences, "input sentences file");
    StageReport report{.stage = "sample", .seed = c.seed};

    SamplerModel model = load_sampler_model(c.sampler_model_path());
    Annotator annotator(c.annotation_cache_path());
    Rng rng(c.seed);
    SampleOptions options{.n_answers = c.n_answers, .n_styles = c.n_styles, .n_clues = c.n_clues};

    std::ifstream in(c.sentences);
    std::string line, out;
    size_t sentences = 0, skipped = 0, inputs = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (c.max_sentences > 0 && sentences + skipped >= static_cast<size_t>(c.max_sentences)) break;
        AnnotatedSentence sentence;
        try {
            sentence = annotator.annotate(line);
        } catch (const InvalidInput&) {
            ++skipped;
            continue;
        }
        const int len = static_cast<int>(sentence.tokens.size());
        if (len < c.min_sentence_tokens || len > c.max_sentence_tokens) {
            ++skipped;
            continue;
        }
        ++sentences;
        for (const GenerationInput& gi : sample_inputs(sentence, model, rng, options)) {
            out += generation_input_to_json(gi);
            out += "\n";
            ++inputs;
        }
    }
    atomic_write(c.inputs_path(), out);
    report.counts["sentences"] = static_cast<double>(sentences);
    report.counts["skipped_sentences"] = static_cast<double>(skipped);
    report.counts["inputs"] = static_cast<double>(inputs);
    return report;
}

StageReport stage_train_s2s(const PipelineConfig& c) {
    require_file(c.records_path(), "training records (run construct first)");
    StageReport report{.stage = "train-s2s", .seed = c.seed};
    std::vector<TrainingRecord> train = load_records(c.records_path());
    std::vector<TrainingRecord> dev;
    if (fs::exists(c.dev_records_path())) dev = load_records(c.dev_records_path());

    Seq2SeqModel model;
    model.config = s2s_config_of(c);
    std::vector<std::string> corpus_tokens;
    for (const TrainingRecord& r : train) {
        for (const Token& t : r.passage.tokens) corpus_tokens.push_back(text::lowercase(t.text));
        for (const std::string& t : text::tokenize(r.question))
            corpus_tokens.push_back(text::lowercase(t));
    }
    model.vocab = reduce_vocabulary(corpus_tokens, model.config.vocab_size);
    model.init_params();
    Seq2SeqModel::TrainReport tr = model.train(train, dev, c.s2s_dir());

    report.counts["train_records"] = static_cast<double>(train.size());
    report.counts["dev_records"] = static_cast<double>(dev.size());
    if (!tr.epoch_train_loss.empty()) {
        report.counts["first_epoch_loss"] = tr.epoch_train_loss.front();
        report.counts["last_epoch_loss"] = tr.epoch_train_loss.back();
        report.counts["last_dev_loss"] = tr.epoch_dev_loss.back();
    }
    return report;
}

StageReport stage_finetune_lm(const PipelineConfig& c) {
    require_file(c.records_path(), "training records (run construct first)");
    StageReport report{.stage = "finetune-lm", .seed = c.seed};
    std::vector<TrainingRecord> records = load_records(c.records_path());
    TinyGruLm::Config lc;
    lc.seed = c.seed;
    TinyGruLm lm(lc);
    FinetuneReport fr = finetune(records, lm, c.lm_epochs, c.lm_batch);
    lm.save(c.lm_ckpt_path() + ".tmp");
    fs::rename(c.lm_ckpt_path() + ".tmp", c.lm_ckpt_path());
    report.counts["records"] = static_cast<double>(records.size());
    if (!fr.epoch_loss.empty()) {
        report.counts["first_epoch_loss"] = fr.epoch_loss.front();
        report.counts["last_epoch_loss"] = fr.epoch_loss.back();
    }
    return report;
}

GeneratedSample sample_of_input(const GenerationInput& gi, std::string question,
                                const std::string& generator) {
    GeneratedSample s;
    s.passage_text = gi.sentence.raw_text;
    s.question = std::move(question);
    const Token& first = gi.sentence.tokens[static_cast<size_t>(gi.answer.start)];
    const Token& last = gi.sentence.tokens[static_cast<size_t>(gi.answer.end - 1)];
    s.answer_span = {first.begin_char, last.end_char, gi.answer.text};
    s.generator = generator;
    s.style = style_name(gi.style);
    s.clue_text = gi.clue.text;
    return s;
}

StageReport stage_generate(const PipelineConfig& c) {
    require_file(c.inputs_path(), "sampled inputs (run sample first)");
    StageReport report{.stage = "generate", .seed = c.seed};

    std::vector<GenerationInput> inputs;
    {
        std::ifstream in(c.inputs_path());
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) inputs.push_back(generation_input_from_json(line));
    }

    std::string out;
    size_t generated = 0, empty = 0;
    if (c.backend == "s2s") {
        require_file(c.s2s_dir() + "/final.ckpt", "seq2seq checkpoint (run train-s2s first)");
        Seq2SeqModel model = Seq2SeqModel::load(c.s2s_dir() + "/final.ckpt");
        for (const GenerationInput& gi : inputs) {
            auto hyps = model.beam_generate(gi, c.beam_width, c.max_len);
            if (hyps.empty() || hyps.front().text.empty()) {
                ++empty;
                continue;
            }
            out += generated_sample_to_json(sample_of_input(gi, hyps.front().text, "s2s"));
            out += "\n";
            ++generated;
        }
    } else {
        require_file(c.lm_ckpt_path(), "LM checkpoint (run finetune-lm first)");
        auto lm = TinyGruLm::load(c.lm_ckpt_path());
        size_t index = 0;
        for (const GenerationInput& gi : inputs) {
            Rng rng(c.seed + index++);
            std::string q = nucleus_generate(gi, *lm, c.nucleus_p, c.max_len, rng);
            if (q.empty()) {
                ++empty;
                continue;
            }
            out += generated_sample_to_json(sample_of_input(gi, q, "lm"));
            out += "\n";
            ++generated;
        }
    }
    atomic_write(c.generated_path(), out);
    report.counts["inputs"] = static_cast<double>(inputs.size());
    report.counts["generated"] = static_cast<double>(generated);
    report.counts["empty"] = static_cast<double>(empty);
    return report;
}

StageReport stage_filter(const PipelineConfig& c) {
    require_file(c.generated_path(), "generated samples (run generate first)");
    StageReport report{.stage = "filter", .seed = c.seed};
    std::vector<GeneratedSample> samples = load_generated_samples(c.generated_path());
    StubEntailmentAdapter ent;
    StubQaAdapter qa;
    auto [kept, dropped, fr] = filter_batch(samples, ent, qa, c.filter_threshold);

    std::string kept_out, dropped_out;
    for (const GeneratedSample& s : kept) kept_out += generated_sample_to_json(s) + "\n";
    for (const GeneratedSample& s : dropped) dropped_out += generated_sample_to_json(s) + "\n";
    atomic_write(c.kept_path(), kept_out);
    atomic_write(c.dropped_path(), dropped_out);

    report.counts["input"] = static_cast<double>(fr.input_count);
    report.counts["kept"] = static_cast<double>(fr.kept_count);
    report.counts["dropped"] = static_cast<double>(fr.dropped_count);
    report.counts["dropped_entailment"] = static_cast<double>(fr.dropped_entailment);
    report.counts["dropped_span_f1"] = static_cast<double>(fr.dropped_span_f1);
    report.counts["undecided"] = static_cast<double>(fr.undecided_count);
    report.counts["keep_rate"] = fr.keep_rate();
    return report;
}

StageReport stage_evaluate(const PipelineConfig& c) {
    require_file(c.generated_path(), "generated samples (run generate first)");
    require_file(c.reference, "reference question file");
    StageReport report{.stage = "evaluate", .seed = c.seed};
    EvalReport er = evaluate(c.generated_path(), c.reference);
    std::ostringstream out;
    out.precision(4);
    out << std::fixed;
    out << "samples " << er.sample_count << "\n"
        << "bleu_1 " << er.bleu_1 << "\n"
        << "bleu_2 " << er.bleu_2 << "\n"
        << "bleu_3 " << er.bleu_3 << "\n"
        << "bleu_4 " << er.bleu_4 << "\n"
        << "rouge_l " << er.rouge_l << "\n"
        << "smoothing_applied " << (er.smoothing_applied ? "yes" : "no") << "\n";
    atomic_write(c.eval_report_path(), out.str());
    report.counts["samples"] = static_cast<double>(er.sample_count);
    report.counts["bleu_4"] = er.bleu_4;
    report.counts["rouge_l"] = er.rouge_l;
    return report;
}

} // namespace

StageReport run_stage(const std::string& stage_name, const PipelineConfig& config) {
    config.validate();
    fs::create_directories(config.workdir);
    const auto started = std::chrono::steady_clock::now();

    StageReport report;
    if (stage_name == "construct") report = stage_construct(config);
    else if (stage_name == "learn-dist") report = stage_learn_dist(config);
    else if (stage_name == "sample") report = stage_sample(config);
    else if (stage_name == "train-s2s") report = stage_train_s2s(config);
    else if (stage_name == "finetune-lm") report = stage_finetune_lm(config);
    else if (stage_name == "generate") report = stage_generate(config);
    else if (stage_name == "filter") report = stage_filter(config);
    else if (stage_name == "evaluate") report = stage_evaluate(config);
    else throw InvalidInput("unknown stage: " + stage_name);

    report.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    json j;
    j["stage"] = report.stage;
    j["seed"] = report.seed;
    j["duration_seconds"] = report.duration_seconds;
    j["counts"] = report.counts;
    atomic_write(config.report_path(report.stage), j.dump(2) + "\n");
    return report;
}

std::vector<StageReport> run_all(const PipelineConfig& config) {
    std::vector<StageReport> reports;
    reports.push_back(run_stage("construct", config));
    reports.push_back(run_stage("learn-dist", config));
    reports.push_back(run_stage("sample", config));
    reports.push_back(run_stage(config.backend == "lm" ? "finetune-lm" : "train-s2s", config));
    reports.push_back(run_stage("generate", config));
    reports.push_back(run_stage("filter", config));
    if (!config.reference.empty()) reports.push_back(run_stage("evaluate", config));
    return reports;
}

} // namespace acsqg
