#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "acsqg/errors.hpp"
#include "acsqg/pipeline.hpp"

using namespace acsqg;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kData = ACSQG_DATA_DIR;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

PipelineConfig tiny_config(const std::string& workdir) {
    PipelineConfig c;
    c.corpus = kData + "/corpus_tiny.json";
    c.vectors = kData + "/vectors.txt";
    c.synonyms = kData + "/synonyms.txt";
    c.sentences = kData + "/sentences.txt";
    c.workdir = workdir;
    c.backend = "lm";
    c.lm_epochs = 1;
    c.max_sentences = 3;
    c.max_len = 10;
    c.seed = 29;
    return c;
}

} // namespace

TEST_CASE("config file parsing handles comments and overrides") {
    TempDir dir("acsqg_cfg_test");
    const std::string path = (dir.path / "p.conf").string();
    {
        std::ofstream out(path);
        out << "# pipeline settings\n"
            << "corpus = /tmp/c.json\n"
            << "workdir= /tmp/w\n"
            << "n_answers =3\n"
            << "nucleus_p = 0.75\n"
            << "backend = lm\n"
            << "seed = 99\n"
            << "\n"
            << "max_sentences = 7\n";
    }
    PipelineConfig c = PipelineConfig::from_file(path);
    CHECK(c.corpus == "/tmp/c.json");
    CHECK(c.workdir == "/tmp/w");
    CHECK(c.n_answers == 3);
    CHECK(c.nucleus_p == doctest::Approx(0.75));
    CHECK(c.backend == "lm");
    CHECK(c.seed == 99);
    CHECK(c.max_sentences == 7);
    CHECK(c.n_styles == 2); // untouched default
    CHECK_THROWS_AS(PipelineConfig::from_file("/nonexistent.conf"), ResourceError);
}

TEST_CASE("config validation") {
    PipelineConfig c;
    CHECK_NOTHROW(c.validate());
    c.backend = "transformer";
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c.backend = "s2s";
    c.n_answers = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("atomic_write lands the full contents and overwrites") {
    TempDir dir("acsqg_atomic_test");
    const std::string path = (dir.path / "x.txt").string();
    atomic_write(path, "first\n");
    CHECK(slurp(path) == "first\n");
    atomic_write(path, "second\n");
    CHECK(slurp(path) == "second\n");
    CHECK_FALSE(fs::exists(path + ".tmp"));
}

TEST_CASE("stages refuse to run before their dependencies") {
    TempDir dir("acsqg_dep_test");
    PipelineConfig c = tiny_config((dir.path / "out").string());
    try {
        run_stage("sample", c);
        FAIL("expected DependencyError");
    } catch (const DependencyError& e) {
        // the message must name the missing artifact
        CHECK(std::string(e.what()).find(c.sampler_model_path()) != std::string::npos);
    }
    CHECK_THROWS_AS(run_stage("generate", c), DependencyError);
    CHECK_THROWS_AS(run_stage("filter", c), DependencyError);
    CHECK_THROWS_AS(run_stage("nonsense", c), InvalidInput);
}

TEST_CASE("full lm pipeline produces consistent artifacts and reports") {
    TempDir dir("acsqg_e2e_test");
    PipelineConfig c = tiny_config((dir.path / "out").string());

    StageReport construct = run_stage("construct", c);
    CHECK(construct.counts.at("input_samples") == 119);
    CHECK(construct.counts.at("emitted_records") + construct.counts.at("dropped_records") ==
          construct.counts.at("input_samples"));
    CHECK(construct.counts.at("train_records") + construct.counts.at("dev_records") ==
          construct.counts.at("emitted_records"));
    CHECK(fs::exists(c.records_path()));
    CHECK(fs::exists(c.dev_records_path()));
    CHECK(fs::exists(c.related_words_path()));

    StageReport learn = run_stage("learn-dist", c);
    CHECK(learn.counts.at("records") == construct.counts.at("train_records"));
    CHECK(fs::exists(c.sampler_model_path()));

    StageReport sample = run_stage("sample", c);
    CHECK(sample.counts.at("sentences") + sample.counts.at("skipped_sentences") <= 3);
    CHECK(sample.counts.at("inputs") <=
          sample.counts.at("sentences") * c.n_answers * c.n_styles * c.n_clues);
    const std::string inputs_first = slurp(c.inputs_path());
    // line count matches the reported input count
    size_t lines = 0;
    for (char ch : inputs_first)
        if (ch == '\n') ++lines;
    CHECK(lines == static_cast<size_t>(sample.counts.at("inputs")));

    StageReport tune = run_stage("finetune-lm", c);
    CHECK(tune.counts.at("records") == learn.counts.at("records"));
    CHECK(fs::exists(c.lm_ckpt_path()));

    StageReport gen = run_stage("generate", c);
    CHECK(gen.counts.at("inputs") == sample.counts.at("inputs"));
    CHECK(gen.counts.at("generated") + gen.counts.at("empty") == gen.counts.at("inputs"));
    const std::string gen_first = slurp(c.generated_path());

    StageReport filt = run_stage("filter", c);
    CHECK(filt.counts.at("input") == gen.counts.at("generated"));
    CHECK(filt.counts.at("kept") + filt.counts.at("dropped") == filt.counts.at("input"));
    CHECK(fs::exists(c.kept_path()));
    CHECK(fs::exists(c.dropped_path()));

    // self-evaluation against the generated file itself exercises the
    // evaluate stage without a human reference set
    c.reference = c.generated_path();
    if (gen.counts.at("generated") > 0) {
        StageReport ev = run_stage("evaluate", c);
        CHECK(ev.counts.at("samples") >= 1);
        CHECK(ev.counts.at("samples") <= gen.counts.at("generated"));
        CHECK(ev.counts.at("rouge_l") == doctest::Approx(100.0));
        CHECK(fs::exists(c.eval_report_path()));
    }

    // stage report files round-trip through json with the same counts
    json j = json::parse(slurp(c.report_path("sample")));
    CHECK(j.at("stage") == "sample");
    CHECK(j.at("seed") == 29);
    CHECK(j.at("counts").at("inputs").get<double>() == sample.counts.at("inputs"));
    CHECK(j.at("duration_seconds").get<double>() >= 0.0);

    // reruns with the same seed are byte-identical
    run_stage("sample", c);
    CHECK(slurp(c.inputs_path()) == inputs_first);
    run_stage("generate", c);
    CHECK(slurp(c.generated_path()) == gen_first);

    // a different seed changes the sampled inputs
    PipelineConfig other = c;
    other.seed = 30;
    run_stage("sample", other);
    CHECK(slurp(c.inputs_path()) != inputs_first);
}
