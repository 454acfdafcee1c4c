#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "artisan/agent.hpp"
#include "artisan/llm.hpp"

namespace artisan {

/// The six-way outcome classification, in report order.
enum class Category {
    FullReproduction,
    LastMile,
    CopiedResults,
    MismatchedResults,
    RuntimeError,
    StaticError,
};
inline constexpr std::size_t kCategoryCount = 6;

std::string category_name(Category c);

struct RunRecord {
    std::string task_id;
    Category category = Category::StaticError;
    double cost = 0.0;
    std::int64_t wall_ms = 0;
    int steps_used = 0;
    std::optional<std::filesystem::path> script_path; // relative to out dir
    std::string error; // non-empty when the task crashed outside the episode
};

/// Load one task from a manifest directory containing table.md, paper.txt
/// and task.toml (url plus optional limit overrides). Missing files and
/// malformed tables raise errors naming the offending file.
Task load_task(const std::filesystem::path& manifest_dir);

/// Per-task replay fixture declared in task.toml (path relative to the
/// manifest dir), when present.
std::optional<std::filesystem::path> task_replay_file(
    const std::filesystem::path& manifest_dir);

/// Accepted episodes take the method-judge category. Exhausted episodes take
/// the last output verdict's failure category; a last submission that passed
/// the output judge but not the method judge counts as CopiedResults, and an
/// episode with no submission at all is a StaticError (no script exists at
/// the expected path).
Category classify_outcome(const Episode& episode);

struct BatchConfig {
    int parallelism = 1;
    std::string model_id = "gpt-5-mini";
    std::map<std::string, ModelRates> rates; // defaults applied when empty
    std::optional<std::filesystem::path> replay_file; // fallback for all tasks
    std::optional<std::filesystem::path> record_file; // single-task runs only
    std::filesystem::path out_dir;
    std::filesystem::path cache_dir;
    std::string engine = "container"; // or "subprocess"
    std::string container_image = "ubuntu:24.04";
    std::string api_base = "https://api.openai.com";
    std::string api_key; // falls back to ARTISAN_API_KEY

    std::optional<int> step_limit_override;
    std::optional<double> cost_limit_override;
    std::optional<std::chrono::milliseconds> time_limit_override;
    CompareOptions compare;
    SandboxConfig sandbox;
    std::chrono::milliseconds judge_run_timeout{3'600'000};
    bool method_judge_provenance = true;
};

/// Built-in per-million-token rates for the models the CLI knows about.
std::map<std::string, ModelRates> default_model_rates();

/// Startup validation: engine name, model rates, replay fixture existence.
/// Throws ConfigError so misconfiguration fails before any episode starts.
void validate_batch_config(const BatchConfig& config);

struct BatchReport {
    std::vector<RunRecord> records; // sorted by task_id
    std::array<int, kCategoryCount> counts{};
    int tasks = 0;
    double mean_cost = 0.0;
    double mean_wall_s = 0.0;
    bool all_accepted = false;
};

/// Run one task end to end; exceptions inside the episode surface as the
/// task's failure record, not a crash.
RunRecord run_task(const std::filesystem::path& manifest_dir, const BatchConfig& config);

/// Run a set of tasks with a bounded worker pool. One task's failure never
/// aborts the batch; the report is ordered by task_id regardless of
/// completion order.
BatchReport run_batch(const std::vector<std::filesystem::path>& task_dirs,
                      const BatchConfig& config);

/// Task directories under a root (any directory containing task.toml),
/// sorted by name.
std::vector<std::filesystem::path> discover_tasks(const std::filesystem::path& root);

/// Stable machine-readable report: fixed key order, second-granularity
/// timing, script paths relative to the out dir. Byte-identical across
/// repeat runs of the same deterministic batch.
std::string report_to_json(const BatchReport& report);

/// Human-readable table for stdout.
std::string report_to_text(const BatchReport& report);

BatchReport summarize(std::vector<RunRecord> records);

} // namespace artisan
