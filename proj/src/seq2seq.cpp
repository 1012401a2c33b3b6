#include "acsqg/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "acsqg/errors.hpp"
#include "acsqg/text.hpp"

namespace acsqg {

using ad::Mat;
using ad::Tape;
using ad::Var;
using json = nlohmann::json;

int Vocab::id_of(const std::string& lowercased_token) const {
    auto it = token_to_id.find(lowercased_token);
    return it == token_to_id.end() ? kUnk : it->second;
}

Vocab reduce_vocabulary(const std::vector<std::string>& corpus_tokens, int n_v) {
    if (n_v < 1) throw InvalidInput("reduce_vocabulary: N_V must be >= 1");
    if (corpus_tokens.empty()) throw InvalidInput("reduce_vocabulary: empty corpus");
    std::map<std::string, long> counts;
    for (const std::string& tok : corpus_tokens) ++counts[text::lowercase(tok)];
    std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocab v;
    v.id_to_token = {"<pad>", "<unk>", "<sos>", "<eos>"};
    for (const auto& [tok, _] : items) {
        if (static_cast<int>(v.id_to_token.size()) >= Vocab::kReserved + n_v) break;
        v.id_to_token.push_back(tok);
    }
    for (int i = 0; i < v.size(); ++i) v.token_to_id[v.id_to_token[static_cast<size_t>(i)]] = i;
    return v;
}

const std::vector<std::string>& pos_tagset() {
    static const std::vector<std::string> tags = {
        "NOUN", "PROPN", "VERB", "AUX", "ADJ", "ADV", "DET", "ADP", "PRON",
        "CCONJ", "SCONJ", "NUM", "PART", "PUNCT", "SYM", "INTJ", "X",
    };
    return tags;
}

const std::vector<std::string>& ner_tagset() {
    static const std::vector<std::string> tags = {
        "PERSON", "ORG", "GPE", "DATE", "CARDINAL", "MISC", "UNK",
    };
    return tags;
}

int pos_tag_index(const std::string& tag) {
    const auto& tags = pos_tagset();
    for (size_t i = 0; i < tags.size(); ++i)
        if (tags[i] == tag) return static_cast<int>(i);
    return static_cast<int>(tags.size()) - 1; // X
}

int ner_tag_index(const std::string& tag) {
    const auto& tags = ner_tagset();
    for (size_t i = 0; i < tags.size(); ++i)
        if (tags[i] == tag) return static_cast<int>(i);
    return static_cast<int>(tags.size()) - 1; // UNK
}

namespace {

Mat init_matrix(long rows, long cols, std::mt19937_64& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<long>(cols, 1)));
    std::uniform_real_distribution<double> dist(-scale, scale);
    Mat m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

struct GraphParams {
    Tape* tape = nullptr;
    std::map<std::string, Var> vars;

    Var operator()(const std::string& name) const {
        auto it = vars.find(name);
        if (it == vars.end()) throw ModelError("missing parameter: " + name);
        return it->second;
    }
};

GraphParams leaf_all(Tape& tape, const std::map<std::string, Mat>& params,
                     std::map<std::string, Mat>* grads) {
    GraphParams g;
    g.tape = &tape;
    for (const auto& [name, value] : params)
        g.vars[name] = tape.leaf(value, grads ? &(*grads)[name] : nullptr);
    return g;
}

// PyTorch-convention GRU cell: h' = (1-z) * n + z * h
Var gru_step(Tape& t, const GraphParams& g, const std::string& prefix, Var x, Var h) {
    Var z = t.sigmoid(t.add(t.add(t.matmul(g(prefix + "Wz"), x), t.matmul(g(prefix + "Uz"), h)),
                            g(prefix + "bz")));
    Var r = t.sigmoid(t.add(t.add(t.matmul(g(prefix + "Wr"), x), t.matmul(g(prefix + "Ur"), h)),
                            g(prefix + "br")));
    Var n = t.tanh(t.add(t.add(t.matmul(g(prefix + "Wn"), x), t.matmul(g(prefix + "Un"), t.mul(r, h))),
                         g(prefix + "bn")));
    return t.add(t.mul(t.one_minus(z), n), t.mul(z, h));
}

struct TokenFeatures {
    int word_id = Vocab::kUnk;
    int pos = 0;
    int ner = 0;
    int content = 0;
    int in_answer = 0;
    int in_clue = 0;
    std::string surface_lower;
};

std::vector<TokenFeatures> featurize(const Vocab& vocab, const GenerationInput& input) {
    std::vector<TokenFeatures> out;
    for (const Token& t : input.sentence.tokens) {
        TokenFeatures f;
        f.surface_lower = text::lowercase(t.text);
        f.word_id = vocab.id_of(f.surface_lower);
        f.pos = pos_tag_index(t.pos);
        f.ner = ner_tag_index(t.ner);
        f.content = t.is_content ? 1 : 0;
        f.in_answer = (t.index >= input.answer.start && t.index < input.answer.end) ? 1 : 0;
        f.in_clue = (t.index >= input.clue.start && t.index < input.clue.end) ? 1 : 0;
        out.push_back(std::move(f));
    }
    return out;
}

Var embed_token(Tape& t, const GraphParams& g, const TokenFeatures& f) {
    return t.concat_rows({
        t.col(g("word_emb"), f.word_id),
        t.col(g("ner_emb"), f.ner),
        t.col(g("pos_emb"), f.pos),
        t.col(g("content_emb"), f.content),
        t.col(g("ans_emb"), f.in_answer),
        t.col(g("clue_emb"), f.in_clue),
    });
}

struct EncoderOut {
    std::vector<Var> states; // h_i
    Var stacked;             // H, 2*enc_hidden x L
    Var backward_first;      // backward half of h_1
};

EncoderOut run_encoder(Tape& t, const GraphParams& g, const Seq2SeqConfig& cfg,
                       const std::vector<TokenFeatures>& feats) {
    const int L = static_cast<int>(feats.size());
    if (L == 0) throw InvalidInput("encode: empty sentence");
    std::vector<Var> inputs;
    inputs.reserve(static_cast<size_t>(L));
    for (const TokenFeatures& f : feats) inputs.push_back(embed_token(t, g, f));

    Var zero = t.leaf(Mat::Zero(cfg.enc_hidden, 1));
    std::vector<Var> fwd(static_cast<size_t>(L)), bwd(static_cast<size_t>(L));
    Var h = zero;
    for (int i = 0; i < L; ++i) {
        h = gru_step(t, g, "ef_", inputs[static_cast<size_t>(i)], h);
        fwd[static_cast<size_t>(i)] = h;
    }
    h = zero;
    for (int i = L - 1; i >= 0; --i) {
        h = gru_step(t, g, "eb_", inputs[static_cast<size_t>(i)], h);
        bwd[static_cast<size_t>(i)] = h;
    }
    EncoderOut out;
    for (int i = 0; i < L; ++i)
        out.states.push_back(t.concat_rows({fwd[static_cast<size_t>(i)], bwd[static_cast<size_t>(i)]}));
    out.stacked = t.hstack(out.states);
    out.backward_first = bwd[0];
    return out;
}

Var decoder_init(Tape& t, const GraphParams& g, Style style, Var backward_first) {
    Var s_l = t.tanh(t.add(t.matmul(g("W0"), backward_first), g("b0")));
    Var h_s = t.col(g("style_emb"), static_cast<int>(style));
    return t.concat_rows({h_s, s_l});
}

struct StepVars {
    Var state;     // s_t
    Var context;   // c_t
    Var attention; // 1 x L row
    Var gen;       // vocab distribution
    Var gate;      // 1x1
};

StepVars decode_step_graph(Tape& t, const GraphParams& g, const Seq2SeqConfig& cfg,
                           Var prev_emb, Var prev_context, Var prev_state, Var H,
                           Rng* dropout_rng) {
    StepVars sv;
    Var x = t.concat_rows({prev_emb, prev_context});
    sv.state = gru_step(t, g, "d_", x, prev_state);

    Var scores = t.tanh(t.add_broadcast_col(t.matmul(g("Wh"), H), t.matmul(g("Ws"), sv.state)));
    Var e = t.matmul(t.transpose(g("v")), scores); // 1 x L
    sv.attention = t.softmax(e);
    sv.context = t.matmul(H, t.transpose(sv.attention));

    Var r = t.add(t.add(t.matmul(g("Wrw"), prev_emb), t.matmul(g("Wrc"), sv.context)),
                  t.matmul(g("Wrs"), sv.state));
    Var m = t.maxout_pairs(r);
    if (dropout_rng && cfg.dropout > 0) {
        Mat mask(cfg.readout_dim / 2, 1);
        for (long i = 0; i < mask.rows(); ++i)
            mask(i, 0) = dropout_rng->next_double() < cfg.dropout ? 0.0 : 1.0 / (1.0 - cfg.dropout);
        m = t.mul_const(m, mask);
    }
    sv.gen = t.softmax(t.matmul(g("Wo"), m));
    sv.gate = t.sigmoid(
        t.add(t.add(t.matmul(g("Wcs"), sv.state), t.matmul(g("Wcc"), sv.context)), g("bc")));
    return sv;
}

} // namespace

GenerationInput Seq2SeqModel::input_of_record(const TrainingRecord& record) {
    GenerationInput gi;
    gi.sentence = record.passage;
    gi.answer = record.answer;
    gi.clue = record.clue;
    gi.style = record.style;
    return gi;
}

void Seq2SeqModel::init_params() {
    std::mt19937_64 rng(config.seed);
    // the reduced vocabulary can come up short of the configured cap
    const int V = vocab.size() > 0 ? vocab.size() : Vocab::kReserved + config.vocab_size;
    const int in_dim = config.word_dim + 5 * config.feat_dim;
    const int eh = config.enc_hidden;
    const int dh = config.dec_hidden();
    const int dec_in = config.word_dim + 2 * eh;
    if (config.readout_dim % 2 != 0) throw InvalidInput("readout_dim must be even");

    params.clear();
    params["word_emb"] = init_matrix(config.word_dim, V, rng);
    params["ner_emb"] = init_matrix(config.feat_dim, static_cast<long>(ner_tagset().size()), rng);
    params["pos_emb"] = init_matrix(config.feat_dim, static_cast<long>(pos_tagset().size()), rng);
    params["content_emb"] = init_matrix(config.feat_dim, 2, rng);
    params["ans_emb"] = init_matrix(config.feat_dim, 2, rng);
    params["clue_emb"] = init_matrix(config.feat_dim, 2, rng);
    params["style_emb"] = init_matrix(config.style_dim, kStyleCount, rng);

    auto gru = [&](const std::string& prefix, int state, int input) {
        params[prefix + "Wz"] = init_matrix(state, input, rng);
        params[prefix + "Uz"] = init_matrix(state, state, rng);
        params[prefix + "bz"] = Mat::Zero(state, 1);
        params[prefix + "Wr"] = init_matrix(state, input, rng);
        params[prefix + "Ur"] = init_matrix(state, state, rng);
        params[prefix + "br"] = Mat::Zero(state, 1);
        params[prefix + "Wn"] = init_matrix(state, input, rng);
        params[prefix + "Un"] = init_matrix(state, state, rng);
        params[prefix + "bn"] = Mat::Zero(state, 1);
    };
    gru("ef_", eh, in_dim);
    gru("eb_", eh, in_dim);
    gru("d_", dh, dec_in);

    params["W0"] = init_matrix(eh, eh, rng);
    params["b0"] = Mat::Zero(eh, 1);
    params["Ws"] = init_matrix(config.attn_dim, dh, rng);
    params["Wh"] = init_matrix(config.attn_dim, 2 * eh, rng);
    params["v"] = init_matrix(config.attn_dim, 1, rng);
    params["Wrw"] = init_matrix(config.readout_dim, config.word_dim, rng);
    params["Wrc"] = init_matrix(config.readout_dim, 2 * eh, rng);
    params["Wrs"] = init_matrix(config.readout_dim, dh, rng);
    params["Wo"] = init_matrix(V, config.readout_dim / 2, rng);
    params["Wcs"] = init_matrix(1, dh, rng);
    params["Wcc"] = init_matrix(1, 2 * eh, rng);
    params["bc"] = Mat::Zero(1, 1);
}

std::vector<Eigen::VectorXd> Seq2SeqModel::encode(const GenerationInput& input) const {
    if (input.sentence.tokens.empty()) throw InvalidInput("encode: empty sentence");
    Tape tape;
    GraphParams g = leaf_all(tape, params, nullptr);
    EncoderOut enc = run_encoder(tape, g, config, featurize(vocab, input));
    std::vector<Eigen::VectorXd> out;
    for (Var h : enc.states) out.emplace_back(tape.val(h).col(0));
    return out;
}

Seq2SeqModel::DecodeState Seq2SeqModel::init_decoder(
    Style style, const std::vector<Eigen::VectorXd>& enc_states) const {
    if (enc_states.empty()) throw InvalidInput("init_decoder: no encoder states");
    const int idx = static_cast<int>(style);
    if (idx < 0 || idx >= kStyleCount) throw InvalidInput("init_decoder: unknown style");
    Tape tape;
    GraphParams g = leaf_all(tape, params, nullptr);
    Mat bwd = enc_states[0].tail(config.enc_hidden);
    Var s0 = decoder_init(tape, g, style, tape.leaf(bwd));
    DecodeState st;
    st.hidden = tape.val(s0).col(0);
    st.context = Eigen::VectorXd::Zero(2 * config.enc_hidden);
    return st;
}

Seq2SeqModel::StepResult Seq2SeqModel::decode_step(
    const DecodeState& state, int prev_symbol, const GenerationInput& input,
    const std::vector<Eigen::VectorXd>& enc_states) const {
    if (enc_states.empty()) throw InvalidInput("decode_step: no encoder states");
    const int L = static_cast<int>(enc_states.size());
    const int V = vocab.size();
    if (state.hidden.size() != config.dec_hidden())
        throw ModelError("decode_step: state dimension mismatch");

    std::vector<TokenFeatures> feats = featurize(vocab, input);
    int prev_word_id = Vocab::kSos;
    if (prev_symbol >= 0 && prev_symbol < V) prev_word_id = prev_symbol;
    else if (prev_symbol >= V && prev_symbol < V + L)
        prev_word_id = feats[static_cast<size_t>(prev_symbol - V)].word_id;

    Tape tape;
    GraphParams g = leaf_all(tape, params, nullptr);
    Var H = tape.hstack([&] {
        std::vector<Var> cols;
        for (const auto& h : enc_states) cols.push_back(tape.leaf(Mat(h)));
        return cols;
    }());
    Var prev_emb = tape.col(g("word_emb"), prev_word_id);
    Var prev_ctx = tape.leaf(Mat(state.context));
    Var prev_state = tape.leaf(Mat(state.hidden));
    StepVars sv = decode_step_graph(tape, g, config, prev_emb, prev_ctx, prev_state, H, nullptr);

    StepResult res;
    res.generation = tape.val(sv.gen).col(0);
    res.attention = tape.val(sv.attention).row(0).transpose();
    res.copy_gate = tape.val(sv.gate)(0, 0);
    res.mixed = Eigen::VectorXd(V + L);
    res.mixed.head(V) = (1.0 - res.copy_gate) * res.generation;
    res.mixed.tail(L) = res.copy_gate * res.attention;
    res.next.hidden = tape.val(sv.state).col(0);
    res.next.context = tape.val(sv.context).col(0);
    res.next.prefix = state.prefix;
    res.next.prefix.push_back(prev_symbol);
    res.next.log_prob = state.log_prob;
    return res;
}

ad::Var Seq2SeqModel::build_loss(Tape& tape, const TrainingRecord& record,
                                 std::map<std::string, Mat>* grads, Rng* dropout_rng) const {
    GenerationInput input = input_of_record(record);
    std::vector<TokenFeatures> feats = featurize(vocab, input);
    const int L = static_cast<int>(feats.size());
    const int V = vocab.size();
    if (L == 0) throw InvalidInput("build_loss: empty passage");

    std::vector<std::string> gold;
    for (const std::string& tok : text::tokenize(record.question))
        gold.push_back(text::lowercase(tok));
    if (gold.empty()) throw InvalidInput("build_loss: empty question");

    GraphParams g = leaf_all(tape, params, grads);
    EncoderOut enc = run_encoder(tape, g, config, feats);
    Var state = decoder_init(tape, g, input.style, enc.backward_first);
    Var context = tape.leaf(Mat::Zero(2 * config.enc_hidden, 1));

    std::vector<Var> losses;
    int prev_id = Vocab::kSos;
    const size_t steps = gold.size() + 1; // question tokens then <eos>
    for (size_t t_i = 0; t_i < steps; ++t_i) {
        Var prev_emb = tape.col(g("word_emb"), prev_id);
        StepVars sv = decode_step_graph(tape, g, config, prev_emb, context, state, enc.stacked,
                                        dropout_rng);
        state = sv.state;
        context = sv.context;

        const bool is_eos = t_i == gold.size();
        const std::string target = is_eos ? "" : gold[t_i];
        const int target_id = is_eos ? Vocab::kEos : vocab.id_of(target);

        Mat copy_indicator = Mat::Zero(1, L);
        if (!is_eos)
            for (int i = 0; i < L; ++i)
                if (feats[static_cast<size_t>(i)].surface_lower == target) copy_indicator(0, i) = 1.0;
        const bool has_copy = copy_indicator.sum() > 0;
        const bool in_vocab = is_eos || target_id != Vocab::kUnk;

        Var prob;
        Var gen_pick = tape.pick(sv.gen, target_id);
        if (has_copy) {
            Var copy_pick = tape.dot_const(sv.attention, copy_indicator);
            Var copy_part = tape.mul(sv.gate, copy_pick);
            if (in_vocab)
                prob = tape.add(tape.mul(tape.one_minus(sv.gate), gen_pick), copy_part);
            else
                prob = copy_part;
        } else {
            prob = tape.mul(tape.one_minus(sv.gate), gen_pick);
        }
        losses.push_back(tape.neg(tape.log(tape.add_scalar(prob, 1e-12))));

        prev_id = is_eos ? Vocab::kEos : (target_id != Vocab::kUnk ? target_id : Vocab::kUnk);
    }

    Var total = losses[0];
    for (size_t i = 1; i < losses.size(); ++i) total = tape.add(total, losses[i]);
    return tape.scale(total, 1.0 / static_cast<double>(losses.size()));
}

double Seq2SeqModel::dataset_loss(const std::vector<TrainingRecord>& records) const {
    double total = 0;
    size_t n = 0;
    for (const TrainingRecord& r : records) {
        Tape tape;
        Var loss = build_loss(tape, r, nullptr, nullptr);
        total += tape.val(loss)(0, 0);
        ++n;
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

double Seq2SeqModel::token_accuracy(const std::vector<TrainingRecord>& records) const {
    size_t correct = 0, total = 0;
    for (const TrainingRecord& r : records) {
        GenerationInput input = input_of_record(r);
        std::vector<TokenFeatures> feats = featurize(vocab, input);
        std::vector<Eigen::VectorXd> enc = encode(input);
        DecodeState state = init_decoder(r.style, enc);
        std::vector<std::string> gold;
        for (const std::string& tok : text::tokenize(r.question))
            gold.push_back(text::lowercase(tok));
        gold.push_back("<eos>");
        int prev = Vocab::kSos;
        const int V = vocab.size();
        for (const std::string& target : gold) {
            StepResult step = decode_step(state, prev, input, enc);
            int best = 0;
            step.mixed.maxCoeff(&best);
            std::string surface = best < V ? vocab.id_to_token[static_cast<size_t>(best)]
                                           : feats[static_cast<size_t>(best - V)].surface_lower;
            if (surface == target) ++correct;
            ++total;
            state = step.next;
            prev = target == "<eos>" ? Vocab::kEos : vocab.id_of(target);
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

Seq2SeqModel::TrainReport Seq2SeqModel::train(const std::vector<TrainingRecord>& train_records,
                                              const std::vector<TrainingRecord>& dev_records,
                                              const std::string& checkpoint_dir) {
    if (train_records.empty()) throw InvalidInput("train: no records");

    std::map<std::string, Mat> adam_m, adam_v;
    for (const auto& [name, value] : params) {
        adam_m[name] = Mat::Zero(value.rows(), value.cols());
        adam_v[name] = Mat::Zero(value.rows(), value.cols());
    }

    Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
    std::mt19937_64 shuffle_rng(config.seed);
    std::vector<size_t> order(train_records.size());
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    long step_count = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0;
        size_t seen = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            std::map<std::string, Mat> grads;
            double batch_loss = 0;
            for (size_t k = start; k < stop; ++k) {
                Tape tape;
                Var loss = build_loss(tape, train_records[order[k]], &grads,
                                      config.dropout > 0 ? &dropout_rng : nullptr);
                const double lv = tape.val(loss)(0, 0);
                if (!std::isfinite(lv))
                    throw ModelError("non-finite training loss at epoch " + std::to_string(epoch));
                batch_loss += lv;
                tape.backward(loss);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            ++step_count;
            const double bc1 = 1.0 - std::pow(config.beta1, step_count);
            const double bc2 = 1.0 - std::pow(config.beta2, step_count);
            for (auto& [name, grad] : grads) {
                Mat g = grad * inv;
                g = g.cwiseMax(-config.clip).cwiseMin(config.clip);
                Mat& m = adam_m[name];
                Mat& v = adam_v[name];
                m = config.beta1 * m + (1.0 - config.beta1) * g;
                v = config.beta2 * v + (1.0 - config.beta2) * Mat(g.array().square());
                Mat m_hat = m / bc1;
                Mat v_hat = v / bc2;
                params[name] -=
                    config.learning_rate * Mat(m_hat.array() / (v_hat.array().sqrt() + config.epsilon));
            }
            epoch_loss += batch_loss;
            seen += stop - start;
        }
        report.epoch_train_loss.push_back(epoch_loss / static_cast<double>(seen));
        report.epoch_dev_loss.push_back(dev_records.empty() ? 0.0 : dataset_loss(dev_records));
        if (!checkpoint_dir.empty()) {
            std::filesystem::create_directories(checkpoint_dir);
            save(checkpoint_dir + "/epoch" + std::to_string(epoch + 1) + ".ckpt");
        }
    }
    if (!checkpoint_dir.empty()) save(checkpoint_dir + "/final.ckpt");
    return report;
}

std::vector<Seq2SeqModel::Hypothesis> Seq2SeqModel::beam_generate(const GenerationInput& input,
                                                                  int beam_width,
                                                                  int max_len) const {
    if (beam_width <= 0) beam_width = config.beam_width;
    if (max_len <= 0) max_len = config.max_len;
    const int V = vocab.size();
    std::vector<TokenFeatures> feats = featurize(vocab, input);
    const int L = static_cast<int>(feats.size());
    std::vector<Eigen::VectorXd> enc = encode(input);

    struct Beam {
        DecodeState state;
        std::vector<int> symbols;
        double log_prob = 0;
        int prev = Vocab::kSos;
    };
    std::vector<Beam> live{Beam{init_decoder(input.style, enc), {}, 0.0, Vocab::kSos}};
    std::vector<Beam> done;

    for (int step = 0; step < max_len && !live.empty(); ++step) {
        std::vector<Beam> next;
        for (const Beam& b : live) {
            StepResult res = decode_step(b.state, b.prev, input, enc);
            Eigen::VectorXd dist = res.mixed;
            dist[Vocab::kUnk] = 0; // never emit the unknown symbol
            dist[Vocab::kPad] = 0;
            dist[Vocab::kSos] = 0;
            std::vector<int> idx(static_cast<size_t>(dist.size()));
            std::iota(idx.begin(), idx.end(), 0);
            std::partial_sort(idx.begin(), idx.begin() + std::min<long>(beam_width, dist.size()),
                              idx.end(), [&](int a, int c) { return dist[a] > dist[c]; });
            for (int k = 0; k < beam_width && k < static_cast<int>(idx.size()); ++k) {
                const int sym = idx[static_cast<size_t>(k)];
                if (dist[sym] <= 0) break;
                Beam nb;
                nb.state = res.next;
                nb.symbols = b.symbols;
                nb.symbols.push_back(sym);
                nb.log_prob = b.log_prob + std::log(dist[sym]);
                nb.prev = sym;
                if (sym == Vocab::kEos || static_cast<int>(nb.symbols.size()) >= max_len)
                    done.push_back(std::move(nb));
                else
                    next.push_back(std::move(nb));
            }
        }
        std::sort(next.begin(), next.end(),
                  [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });
        if (static_cast<int>(next.size()) > beam_width) next.resize(static_cast<size_t>(beam_width));
        live = std::move(next);
    }
    for (Beam& b : live) done.push_back(std::move(b)); // length-capped leftovers

    auto norm_score = [](const Beam& b) {
        return b.log_prob / static_cast<double>(std::max<size_t>(b.symbols.size(), 1));
    };
    std::sort(done.begin(), done.end(),
              [&](const Beam& a, const Beam& b) { return norm_score(a) > norm_score(b); });
    if (static_cast<int>(done.size()) > beam_width) done.resize(static_cast<size_t>(beam_width));

    std::vector<Hypothesis> out;
    for (const Beam& b : done) {
        std::vector<std::string> words;
        for (int sym : b.symbols) {
            if (sym == Vocab::kEos) break;
            if (sym < V)
                words.push_back(vocab.id_to_token[static_cast<size_t>(sym)]);
            else if (sym - V < L)
                words.push_back(feats[static_cast<size_t>(sym - V)].surface_lower);
        }
        out.push_back({text::join(words), norm_score(b)});
    }
    return out;
}

// --- checkpoint -----------------------------------------------------------

void Seq2SeqModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot write checkpoint: " + path);
    json header;
    header["format"] = "acsqg-s2s-v1";
    header["config"] = {
        {"word_dim", config.word_dim}, {"feat_dim", config.feat_dim},
        {"enc_hidden", config.enc_hidden}, {"style_dim", config.style_dim},
        {"attn_dim", config.attn_dim}, {"readout_dim", config.readout_dim},
        {"vocab_size", config.vocab_size}, {"max_len", config.max_len},
        {"dropout", config.dropout}, {"learning_rate", config.learning_rate},
        {"beta1", config.beta1}, {"beta2", config.beta2}, {"epsilon", config.epsilon},
        {"batch_size", config.batch_size}, {"epochs", config.epochs},
        {"clip", config.clip}, {"beam_width", config.beam_width}, {"seed", config.seed},
    };
    header["config_hash"] = sha256_hex(header["config"].dump());
    header["vocab"] = vocab.id_to_token;
    json shapes = json::array();
    for (const auto& [name, value] : params)
        shapes.push_back({{"name", name}, {"rows", value.rows()}, {"cols", value.cols()}});
    header["tensors"] = shapes;
    const std::string head = header.dump();
    const std::uint64_t head_len = head.size();
    out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, value] : params)
        out.write(reinterpret_cast<const char*>(value.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(value.size())));
}

Seq2SeqModel Seq2SeqModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot read checkpoint: " + path);
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    json header = json::parse(head);
    if (header.value("format", "") != "acsqg-s2s-v1")
        throw FormatError("unrecognized checkpoint format: " + path);

    Seq2SeqModel model;
    const json& c = header.at("config");
    model.config.word_dim = c.at("word_dim");
    model.config.feat_dim = c.at("feat_dim");
    model.config.enc_hidden = c.at("enc_hidden");
    model.config.style_dim = c.at("style_dim");
    model.config.attn_dim = c.at("attn_dim");
    model.config.readout_dim = c.at("readout_dim");
    model.config.vocab_size = c.at("vocab_size");
    model.config.max_len = c.at("max_len");
    model.config.dropout = c.at("dropout");
    model.config.learning_rate = c.at("learning_rate");
    model.config.beta1 = c.at("beta1");
    model.config.beta2 = c.at("beta2");
    model.config.epsilon = c.at("epsilon");
    model.config.batch_size = c.at("batch_size");
    model.config.epochs = c.at("epochs");
    model.config.clip = c.at("clip");
    model.config.beam_width = c.at("beam_width");
    model.config.seed = c.at("seed");
    model.vocab.id_to_token = header.at("vocab").get<std::vector<std::string>>();
    for (int i = 0; i < model.vocab.size(); ++i)
        model.vocab.token_to_id[model.vocab.id_to_token[static_cast<size_t>(i)]] = i;
    for (const json& tj : header.at("tensors")) {
        Mat m(tj.at("rows").get<long>(), tj.at("cols").get<long>());
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size())));
        model.params[tj.at("name").get<std::string>()] = std::move(m);
    }
    if (!in) throw FormatError("truncated checkpoint: " + path);
    return model;
}

} // namespace acsqg
