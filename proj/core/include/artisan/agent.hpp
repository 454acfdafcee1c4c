#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artisan/fetch.hpp"
#include "artisan/judge.hpp"
#include "artisan/llm.hpp"
#include "artisan/sandbox.hpp"
#include "artisan/table.hpp"
#include "artisan/tools.hpp"

namespace artisan {

/// One reproduction job: the paper text, the expected table, where the
/// artifact lives, and the episode limits.
struct Task {
    std::string id;
    std::string paper_text;
    Table expected_table;
    std::string artifact_url;
    /// Base for relative file: URLs (the manifest directory).
    std::filesystem::path base_dir;

    int step_limit = 30;
    double cost_limit = 1.0;
    std::chrono::milliseconds time_limit{8LL * 3600 * 1000};

    /// Limits must be positive and the expected table non-empty.
    void validate() const;
};

struct StepRecord {
    int index = 0;
    std::string thought;
    std::string action;
    std::string observation;
    double cost_delta = 0.0;
    std::int64_t wall_ms = 0;
    std::optional<OutputVerdictKind> output_verdict;
    std::optional<MethodVerdictKind> method_verdict;
};

enum class EpisodeStatus { Running, Finished, Exhausted };

struct Episode {
    std::string task_id;
    std::vector<StepRecord> transcript;
    EpisodeStatus status = EpisodeStatus::Running;
    std::string exhausted_reason;

    std::optional<std::string> final_script;          // accepted script text
    std::optional<std::string> last_submitted_script; // even when rejected
    std::optional<OutputVerdictKind> last_output_verdict;
    std::optional<MethodVerdictKind> last_method_verdict;
    int submissions = 0;
    double total_cost = 0.0;
    std::int64_t wall_ms = 0;

    bool accepted() const { return status == EpisodeStatus::Finished; }
};

/// One JSONL record per step: index, thought, action, observation, cost and
/// timing, plus any verdicts.
std::string step_to_jsonl(const StepRecord& step);

struct AgentConfig {
    SandboxConfig sandbox;
    JudgeConfig judge;
    MethodJudgeConfig method_judge;
    FormatTool::Config format;
    std::size_t prompt_char_budget = 200'000;
    /// When set, trajectory.jsonl / verdict.json / the emitted script land in
    /// out_dir/<task_id>/.
    std::filesystem::path out_dir;
};

struct AgentDeps {
    ChatClient& chat; // metered; shared by the loop, format tool, method judge
    Fetcher& fetcher;
    ExecutionEngine& engine;
    CostMeter& meter;
};

struct PromptPair {
    Message system;
    Message user;
};

/// Build the system and user messages. The user message embeds the masked
/// table, the artifact inventory with its README location, the workflow and
/// the submission paths; the expected table's digits appear nowhere. Paper
/// text beyond the character budget is truncated from the middle.
PromptPair construct_prompt(const Task& task, const MaskedTable& masked,
                            const ArtifactBundle& bundle, std::size_t char_budget);

/// Run one episode: obfuscate, download, then loop observe/think/act until a
/// submission passes both judges or a step/cost/time limit is hit. Every LLM
/// turn, including submissions and format violations, consumes one step.
Episode run_episode(const Task& task, AgentDeps& deps, const AgentConfig& config);

} // namespace artisan
