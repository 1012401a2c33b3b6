#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acsqg/errors.hpp"
#include "acsqg/pipeline.hpp"

namespace {

void print_report(const acsqg::StageReport& report) {
    std::printf("[%s] %.2fs seed=%llu\n", report.stage.c_str(), report.duration_seconds,
                static_cast<unsigned long long>(report.seed));
    for (const auto& [key, value] : report.counts) {
        if (value == static_cast<double>(static_cast<long long>(value)))
            std::printf("  %s = %lld\n", key.c_str(), static_cast<long long>(value));
        else
            std::printf("  %s = %.4f\n", key.c_str(), value);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ACS question-generation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_override = 0;
    bool seed_set = false;

    const std::vector<std::string> stages = {"construct", "learn-dist", "sample",
                                             "train-s2s", "finetune-lm", "generate",
                                             "filter",    "evaluate",   "run-all"};
    for (const std::string& stage : stages) {
        CLI::App* sub = app.add_subcommand(stage);
        sub->add_option("--config", config_path, "key = value config file")->required();
        sub->add_option("--seed", seed_override, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
    }

    CLI11_PARSE(app, argc, argv);
    const std::string stage = app.get_subcommands().front()->get_name();

    try {
        acsqg::PipelineConfig config = acsqg::PipelineConfig::from_file(config_path);
        if (seed_set) config.seed = seed_override;
        if (stage == "run-all") {
            for (const acsqg::StageReport& r : acsqg::run_all(config)) print_report(r);
        } else {
            print_report(acsqg::run_stage(stage, config));
        }
    } catch (const acsqg::DependencyError& e) {
        std::fprintf(stderr, "dependency error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
