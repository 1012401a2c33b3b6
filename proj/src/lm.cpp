#include "acsqg/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "acsqg/autodiff.hpp"
#include "acsqg/errors.hpp"
#include "acsqg/text.hpp"

namespace acsqg {

using ad::Mat;
using ad::Tape;
using ad::Var;
using json = nlohmann::json;

LmTokenizer::LmTokenizer() {
    id_to_token_ = {"<pad>", "<unk>", "<bos>", "<clue>", "<ans>", "<style>", "<ques>", "<eos>"};
    for (int i = 0; i < size(); ++i) token_to_id_[id_to_token_[static_cast<size_t>(i)]] = i;
}

int LmTokenizer::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

int LmTokenizer::add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int id = size();
    id_to_token_.push_back(token);
    token_to_id_[token] = id;
    return id;
}

const std::string& LmTokenizer::token_of(int id) const {
    return id_to_token_.at(static_cast<size_t>(id));
}

PromptSequence serialize_prompt(const GenerationInput& input, const std::string* question,
                                LmTokenizer& tokenizer, int max_context) {
    const auto& tokens = input.sentence.tokens;
    const int n = static_cast<int>(tokens.size());
    if (input.answer.start < 0 || input.answer.end > n || input.answer.start >= input.answer.end ||
        input.clue.start < 0 || input.clue.end > n || input.clue.start >= input.clue.end)
        throw InvalidInput("serialize_prompt: clue/answer span outside passage");

    PromptSequence seq;
    auto push = [&](int id, Segment seg) {
        seq.token_ids.push_back(id);
        seq.segments.push_back(seg);
    };

    push(LmTokenizer::kBos, Segment::Passage);
    for (int i = 0; i < n; ++i) {
        Segment seg = Segment::Passage;
        if (i >= input.answer.start && i < input.answer.end) seg = Segment::Answer;
        else if (i >= input.clue.start && i < input.clue.end) seg = Segment::Clue;
        push(tokenizer.add(text::lowercase(tokens[static_cast<size_t>(i)].text)), seg);
    }
    push(LmTokenizer::kClue, Segment::Clue);
    for (int i = input.clue.start; i < input.clue.end; ++i)
        push(tokenizer.add(text::lowercase(tokens[static_cast<size_t>(i)].text)), Segment::Clue);
    push(LmTokenizer::kAns, Segment::Answer);
    for (int i = input.answer.start; i < input.answer.end; ++i)
        push(tokenizer.add(text::lowercase(tokens[static_cast<size_t>(i)].text)), Segment::Answer);
    push(LmTokenizer::kStyle, Segment::Style);
    push(tokenizer.add(style_name(input.style)), Segment::Style);
    push(LmTokenizer::kQues, Segment::Question);
    if (question) {
        for (const std::string& tok : text::tokenize(*question))
            push(tokenizer.add(text::lowercase(tok)), Segment::Question);
        push(LmTokenizer::kEos, Segment::Question);
        seq.has_target = true;
    }

    if (max_context > 0 && static_cast<int>(seq.token_ids.size()) > max_context) {
        // drop passage tokens from the right; conditioning regions stay intact
        const int excess = static_cast<int>(seq.token_ids.size()) - max_context;
        int passage_end = 1;
        while (passage_end < static_cast<int>(seq.token_ids.size()) &&
               seq.token_ids[static_cast<size_t>(passage_end)] != LmTokenizer::kClue)
            ++passage_end;
        const int keep_from = std::max(1, passage_end - excess);
        seq.token_ids.erase(seq.token_ids.begin() + keep_from, seq.token_ids.begin() + passage_end);
        seq.segments.erase(seq.segments.begin() + keep_from, seq.segments.begin() + passage_end);
    }
    return seq;
}

PromptParts deserialize_prompt(const PromptSequence& seq, const LmTokenizer& tokenizer) {
    PromptParts parts;
    enum Region { None, Passage, Clue, Ans, StyleR, Ques } region = None;
    for (size_t k = 0; k < seq.token_ids.size(); ++k) {
        const int id = seq.token_ids[k];
        switch (id) {
            case LmTokenizer::kBos: region = Passage; continue;
            case LmTokenizer::kClue: region = Clue; continue;
            case LmTokenizer::kAns: region = Ans; continue;
            case LmTokenizer::kStyle: region = StyleR; continue;
            case LmTokenizer::kQues: region = Ques; continue;
            case LmTokenizer::kEos: region = None; continue;
            default: break;
        }
        const std::string& tok = tokenizer.token_of(id);
        switch (region) {
            case Passage: parts.passage.push_back(tok); break;
            case Clue: parts.clue.push_back(tok); break;
            case Ans: parts.answer.push_back(tok); break;
            case StyleR: parts.style = tok; break;
            case Ques: parts.question.push_back(tok); break;
            case None: break;
        }
    }
    return parts;
}

FinetuneReport finetune(const std::vector<TrainingRecord>& records, LmAdapter& lm, int epochs,
                        int batch) {
    if (records.empty()) throw InvalidInput("finetune: no records");
    std::vector<PromptSequence> sequences;
    for (const TrainingRecord& r : records) {
        GenerationInput gi = [&] {
            GenerationInput g;
            g.sentence = r.passage;
            g.answer = r.answer;
            g.clue = r.clue;
            g.style = r.style;
            return g;
        }();
        sequences.push_back(serialize_prompt(gi, &r.question, lm.tokenizer(), lm.max_context()));
    }
    FinetuneReport report;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double loss = 0;
        size_t batches = 0;
        for (size_t start = 0; start < sequences.size(); start += static_cast<size_t>(batch)) {
            const size_t stop = std::min(sequences.size(), start + static_cast<size_t>(batch));
            std::vector<PromptSequence> b(sequences.begin() + static_cast<long>(start),
                                          sequences.begin() + static_cast<long>(stop));
            loss += lm.train_batch(b);
            ++batches;
        }
        report.epoch_loss.push_back(batches == 0 ? 0.0 : loss / static_cast<double>(batches));
    }
    return report;
}

std::vector<int> nucleus_set(const Eigen::VectorXd& probs, double p) {
    std::vector<int> idx(static_cast<size_t>(probs.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return probs[a] != probs[b] ? probs[a] > probs[b] : a < b;
    });
    std::vector<int> out;
    double mass = 0;
    for (int i : idx) {
        out.push_back(i);
        mass += probs[i];
        if (mass >= p) break;
    }
    return out;
}

int nucleus_sample(const Eigen::VectorXd& probs, double p, Rng& rng) {
    std::vector<int> set = nucleus_set(probs, p);
    double mass = 0;
    for (int i : set) mass += probs[i];
    const double u = rng.next_double() * mass;
    double acc = 0;
    for (int i : set) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return set.back();
}

std::string nucleus_generate(const GenerationInput& input, const LmAdapter& lm, double p,
                             int max_len, Rng& rng) {
    // serialization must not grow the vocabulary at generation time
    LmTokenizer& tok = const_cast<LmAdapter&>(lm).tokenizer();
    PromptSequence seq = serialize_prompt(input, nullptr, tok, lm.max_context());
    std::vector<std::string> words;
    for (int step = 0; step < max_len; ++step) {
        Eigen::VectorXd dist = lm.next_token_distribution(seq);
        const int next = nucleus_sample(dist, p, rng);
        if (next == LmTokenizer::kEos) break;
        seq.token_ids.push_back(next);
        seq.segments.push_back(Segment::Question);
        if (!lm.tokenizer().is_marker(next) && next != LmTokenizer::kPad &&
            next != LmTokenizer::kUnk)
            words.push_back(lm.tokenizer().token_of(next));
    }
    return text::join(words);
}

// --- TinyGruLm ------------------------------------------------------------

struct TinyGruLm::Impl {
    std::map<std::string, Mat> params;
    std::map<std::string, Mat> adam_m, adam_v;
    long step_count = 0;
    std::mt19937_64 init_rng;

    explicit Impl(std::uint64_t seed) : init_rng(seed) {}

    Mat init(long rows, long cols) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<long>(cols, 1)));
        std::uniform_real_distribution<double> dist(-scale, scale);
        Mat m(rows, cols);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) m(i, j) = dist(init_rng);
        return m;
    }
};

TinyGruLm::TinyGruLm(Config config) : config_(config), impl_(std::make_shared<Impl>(config.seed)) {
    auto& p = impl_->params;
    const int e = config_.embed_dim;
    const int h = config_.hidden;
    p["tok_emb"] = impl_->init(e, tokenizer_.size());
    p["seg_emb"] = impl_->init(e, 5);
    p["Wz"] = impl_->init(h, e);
    p["Uz"] = impl_->init(h, h);
    p["bz"] = Mat::Zero(h, 1);
    p["Wr"] = impl_->init(h, e);
    p["Ur"] = impl_->init(h, h);
    p["br"] = Mat::Zero(h, 1);
    p["Wn"] = impl_->init(h, e);
    p["Un"] = impl_->init(h, h);
    p["bn"] = Mat::Zero(h, 1);
    p["Wo"] = impl_->init(tokenizer_.size(), h);
    p["bo"] = Mat::Zero(tokenizer_.size(), 1);
}

void TinyGruLm::sync_vocab() {
    auto& p = impl_->params;
    const int v_old = static_cast<int>(p.at("tok_emb").cols());
    const int v_new = tokenizer_.size();
    if (v_new <= v_old) return;
    Mat tok = Mat(config_.embed_dim, v_new);
    tok.leftCols(v_old) = p["tok_emb"];
    tok.rightCols(v_new - v_old) = impl_->init(config_.embed_dim, v_new - v_old);
    p["tok_emb"] = std::move(tok);
    Mat wo = Mat(v_new, config_.hidden);
    wo.topRows(v_old) = p["Wo"];
    wo.bottomRows(v_new - v_old) = impl_->init(v_new - v_old, config_.hidden);
    p["Wo"] = std::move(wo);
    Mat bo = Mat::Zero(v_new, 1);
    bo.topRows(v_old) = p["bo"];
    p["bo"] = std::move(bo);
    impl_->adam_m.clear();
    impl_->adam_v.clear();
    impl_->step_count = 0;
}

namespace {

struct LmGraph {
    std::map<std::string, Var> vars;
    Var operator()(const std::string& n) const { return vars.at(n); }
};

Var lm_hidden_sequence_step(Tape& t, const LmGraph& g, Var x, Var h) {
    Var z = t.sigmoid(t.add(t.add(t.matmul(g("Wz"), x), t.matmul(g("Uz"), h)), g("bz")));
    Var r = t.sigmoid(t.add(t.add(t.matmul(g("Wr"), x), t.matmul(g("Ur"), h)), g("br")));
    Var n = t.tanh(t.add(t.add(t.matmul(g("Wn"), x), t.matmul(g("Un"), t.mul(r, h))), g("bn")));
    return t.add(t.mul(t.one_minus(z), n), t.mul(z, h));
}

} // namespace

Eigen::VectorXd TinyGruLm::next_token_distribution(const PromptSequence& prefix) const {
    const_cast<TinyGruLm*>(this)->sync_vocab();
    const auto& p = impl_->params;
    const int h = config_.hidden;
    Eigen::VectorXd state = Eigen::VectorXd::Zero(h);
    auto sigmoid = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(1.0 / (1.0 + (-x.array()).exp()));
    };
    for (size_t k = 0; k < prefix.token_ids.size(); ++k) {
        Eigen::VectorXd x = p.at("tok_emb").col(prefix.token_ids[k]) +
                            p.at("seg_emb").col(static_cast<int>(prefix.segments[k]));
        Eigen::VectorXd z = sigmoid(p.at("Wz") * x + p.at("Uz") * state + p.at("bz"));
        Eigen::VectorXd r = sigmoid(p.at("Wr") * x + p.at("Ur") * state + p.at("br"));
        Eigen::VectorXd n =
            (p.at("Wn") * x + p.at("Un") * Eigen::VectorXd(r.array() * state.array()) + p.at("bn"))
                .array()
                .tanh();
        state = (1.0 - z.array()) * n.array() + z.array() * state.array();
    }
    Eigen::VectorXd logits = p.at("Wo") * state + p.at("bo");
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

double TinyGruLm::train_batch(const std::vector<PromptSequence>& batch) {
    sync_vocab();
    auto& p = impl_->params;
    std::map<std::string, Mat> grads;
    double total_loss = 0;
    size_t loss_terms = 0;

    for (const PromptSequence& seq : batch) {
        Tape tape;
        LmGraph g;
        for (auto& [name, value] : p) g.vars[name] = tape.leaf(value, &grads[name]);

        // loss on tokens after <ques>
        size_t ques_at = seq.token_ids.size();
        for (size_t k = 0; k < seq.token_ids.size(); ++k)
            if (seq.token_ids[k] == LmTokenizer::kQues) {
                ques_at = k;
                break;
            }

        Var h = tape.leaf(Mat::Zero(config_.hidden, 1));
        std::vector<Var> losses;
        for (size_t k = 0; k + 1 < seq.token_ids.size(); ++k) {
            Var x = tape.add(tape.col(g("tok_emb"), seq.token_ids[k]),
                             tape.col(g("seg_emb"), static_cast<int>(seq.segments[k])));
            h = lm_hidden_sequence_step(tape, g, x, h);
            if (k + 1 <= ques_at) continue; // context tokens are not scored
            Var probs = tape.softmax(tape.add(tape.matmul(g("Wo"), h), g("bo")));
            losses.push_back(tape.neg(
                tape.log(tape.add_scalar(tape.pick(probs, seq.token_ids[k + 1]), 1e-12))));
        }
        if (losses.empty()) continue;
        Var total = losses[0];
        for (size_t i = 1; i < losses.size(); ++i) total = tape.add(total, losses[i]);
        Var loss = tape.scale(total, 1.0 / static_cast<double>(losses.size()));
        total_loss += tape.val(loss)(0, 0);
        ++loss_terms;
        tape.backward(loss);
    }
    if (loss_terms == 0) return 0.0;

    ++impl_->step_count;
    const double bc1 = 1.0 - std::pow(config_.beta1, impl_->step_count);
    const double bc2 = 1.0 - std::pow(config_.beta2, impl_->step_count);
    for (auto& [name, grad] : grads) {
        Mat gmat = grad / static_cast<double>(loss_terms);
        Mat& m = impl_->adam_m[name];
        Mat& v = impl_->adam_v[name];
        if (m.size() == 0) m = Mat::Zero(gmat.rows(), gmat.cols());
        if (v.size() == 0) v = Mat::Zero(gmat.rows(), gmat.cols());
        m = config_.beta1 * m + (1.0 - config_.beta1) * gmat;
        v = config_.beta2 * v + (1.0 - config_.beta2) * Mat(gmat.array().square());
        p[name] -= config_.learning_rate *
                   Mat((m / bc1).array() / ((v / bc2).array().sqrt() + config_.epsilon));
    }
    return total_loss / static_cast<double>(loss_terms);
}

void TinyGruLm::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot write LM checkpoint: " + path);
    json header;
    header["format"] = "acsqg-tinylm-v1";
    header["config"] = {{"embed_dim", config_.embed_dim}, {"hidden", config_.hidden},
                        {"learning_rate", config_.learning_rate}, {"max_context", config_.max_context},
                        {"seed", config_.seed}};
    header["vocab"] = tokenizer_.id_to_token();
    json shapes = json::array();
    for (const auto& [name, value] : impl_->params)
        shapes.push_back({{"name", name}, {"rows", value.rows()}, {"cols", value.cols()}});
    header["tensors"] = shapes;
    const std::string head = header.dump();
    const std::uint64_t head_len = head.size();
    out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, value] : impl_->params)
        out.write(reinterpret_cast<const char*>(value.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(value.size())));
}

std::unique_ptr<TinyGruLm> TinyGruLm::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot read LM checkpoint: " + path);
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    json header = json::parse(head);
    if (header.value("format", "") != "acsqg-tinylm-v1")
        throw FormatError("unrecognized LM checkpoint: " + path);
    Config cfg;
    const json& c = header.at("config");
    cfg.embed_dim = c.at("embed_dim");
    cfg.hidden = c.at("hidden");
    cfg.learning_rate = c.at("learning_rate");
    cfg.max_context = c.at("max_context");
    cfg.seed = c.at("seed");
    auto lm = std::make_unique<TinyGruLm>(cfg);
    for (const std::string& tok : header.at("vocab").get<std::vector<std::string>>())
        lm->tokenizer_.add(tok);
    for (const json& tj : header.at("tensors")) {
        Mat m(tj.at("rows").get<long>(), tj.at("cols").get<long>());
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(m.size())));
        lm->impl_->params[tj.at("name").get<std::string>()] = std::move(m);
    }
    if (!in) throw FormatError("truncated LM checkpoint: " + path);
    return lm;
}

} // namespace acsqg
