#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "artisan/errors.hpp"
#include "artisan/harness.hpp"
#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string model = "gpt-5-mini";
    std::string replay;
    std::string record;
    int step_limit = 0;
    double cost_limit = 0.0;
    std::string time_limit;
    std::string out_dir = "artisan-out";
    std::string cache_dir;
    std::string engine = "container";
    std::string image = "ubuntu:24.04";
    std::string api_base = "https://api.openai.com";
    double prompt_rate = -1.0;
    double completion_rate = -1.0;
    double abs_eps = -1.0;
    double rel_eps = -1.0;
    bool keep_workspace = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--model", flags.model, "Model id for the LLM backend and cost rates");
    cmd->add_option("--replay", flags.replay,
                    "Replay fixture (JSONL); used for tasks without their own");
    cmd->add_option("--record", flags.record, "Record LLM traffic to a replay fixture");
    cmd->add_option("--step-limit", flags.step_limit, "Override the per-task step limit");
    cmd->add_option("--cost-limit", flags.cost_limit, "Override the per-task cost limit (USD)");
    cmd->add_option("--time-limit", flags.time_limit,
                    "Override the per-task time limit (e.g. 8h, 30m, 900s)");
    cmd->add_option("--out", flags.out_dir, "Output directory for trajectories and reports");
    cmd->add_option("--cache-dir", flags.cache_dir,
                    "Artifact/format cache directory (default: $ARTISAN_CACHE_DIR or <out>/cache)");
    cmd->add_option("--engine", flags.engine, "Judge execution engine: container or subprocess");
    cmd->add_option("--image", flags.image, "Container image for the container engine");
    cmd->add_option("--api-base", flags.api_base, "Chat completions base URL");
    cmd->add_option("--prompt-rate", flags.prompt_rate,
                    "Prompt token price per million (overrides the built-in table)");
    cmd->add_option("--completion-rate", flags.completion_rate,
                    "Completion token price per million");
    cmd->add_option("--abs-eps", flags.abs_eps,
                    "Opt-in numeric tolerance: absolute epsilon for cell comparison");
    cmd->add_option("--rel-eps", flags.rel_eps,
                    "Opt-in numeric tolerance: relative epsilon for cell comparison");
    cmd->add_flag("--keep-workspace", flags.keep_workspace,
                  "Keep session workspaces for debugging");
}

artisan::BatchConfig to_config(const CommonFlags& flags) {
    artisan::BatchConfig config;
    config.model_id = flags.model;
    if (!flags.replay.empty()) config.replay_file = fs::path(flags.replay);
    if (!flags.record.empty()) config.record_file = fs::path(flags.record);
    if (flags.step_limit > 0) config.step_limit_override = flags.step_limit;
    if (flags.cost_limit > 0) config.cost_limit_override = flags.cost_limit;
    if (!flags.time_limit.empty())
        config.time_limit_override = artisan::parse_duration(flags.time_limit);
    config.out_dir = fs::path(flags.out_dir);
    if (!flags.cache_dir.empty()) {
        config.cache_dir = fs::path(flags.cache_dir);
    } else if (const char* env = std::getenv("ARTISAN_CACHE_DIR")) {
        config.cache_dir = fs::path(env);
    }
    config.engine = flags.engine;
    config.container_image = flags.image;
    config.api_base = flags.api_base;
    if (flags.prompt_rate >= 0 || flags.completion_rate >= 0) {
        config.rates = artisan::default_model_rates();
        config.rates[flags.model] = {std::max(flags.prompt_rate, 0.0),
                                     std::max(flags.completion_rate, 0.0)};
    }
    if (flags.abs_eps >= 0) config.compare.abs_eps = flags.abs_eps;
    if (flags.rel_eps >= 0) config.compare.rel_eps = flags.rel_eps;
    config.sandbox.keep_workspace = flags.keep_workspace;
    return config;
}

int finish(const artisan::BatchReport& report, const artisan::BatchConfig& config) {
    std::cout << artisan::report_to_text(report);
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        artisan::write_file(config.out_dir / "report.json", artisan::report_to_json(report));
        std::cout << "report: " << (config.out_dir / "report.json").string() << "\n";
    }
    return report.all_accepted ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"artisan: generate and judge reproduction scripts for paper result tables"};
    app.require_subcommand(1);

    std::string task_dir;
    std::string tasks_dir;
    int parallel = 1;
    CommonFlags run_flags;
    CommonFlags batch_flags;

    CLI::App* run = app.add_subcommand("run", "Run a single task");
    run->add_option("--task", task_dir, "Task manifest directory")->required();
    add_common_flags(run, run_flags);

    CLI::App* batch = app.add_subcommand("batch", "Run every task under a directory");
    batch->add_option("--tasks", tasks_dir, "Directory of task manifest directories")->required();
    batch->add_option("--parallel", parallel, "Worker pool size");
    add_common_flags(batch, batch_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            artisan::BatchConfig config = to_config(run_flags);
            artisan::validate_batch_config(config);
            artisan::BatchReport report =
                artisan::summarize({artisan::run_task(fs::path(task_dir), config)});
            return finish(report, config);
        }
        artisan::BatchConfig config = to_config(batch_flags);
        artisan::validate_batch_config(config);
        config.parallelism = parallel;
        config.record_file.reset(); // recording is a single-task affair
        auto dirs = artisan::discover_tasks(fs::path(tasks_dir));
        if (dirs.empty()) {
            std::cerr << "no tasks found under " << tasks_dir << "\n";
            return 2;
        }
        artisan::BatchReport report = artisan::run_batch(dirs, config);
        return finish(report, config);
    } catch (const artisan::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
