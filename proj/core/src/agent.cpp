#include "artisan/agent.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

#include "artisan/errors.hpp"
#include "artisan/prompts.hpp"
#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace artisan {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

std::string human_size(std::uint64_t bytes) {
    if (bytes == 0) return "size unknown";
    return std::to_string(bytes) + " bytes";
}

std::string corrective_observation(const std::string& violation) {
    return "FORMAT ERROR: " + violation +
           "\nRespond with THOUGHT followed by exactly one command in a single fenced code "
           "block.";
}

std::string render_verdict_observation(const OutputVerdict& verdict) {
    switch (verdict.kind) {
    case OutputVerdictKind::StaticError:
        return "WARNING: Output check failed (static error). " + verdict.detail +
               "\nWrite the script at repro.sh and submit again.";
    case OutputVerdictKind::RuntimeError:
        return "WARNING: Output check failed (runtime error). " + verdict.detail +
               "\nFix repro.sh so it runs cleanly from a fresh copy of the workspace, then "
               "submit again.";
    case OutputVerdictKind::Mismatch: {
        std::string obs = "WARNING: Output mismatch (" + verdict.detail + ").\n";
        obs += "The run of repro.sh produced a table that does not match the target. Cells "
               "you already got right are shown; the digits of wrong cells are masked:\n\n";
        if (verdict.feedback) obs += render_table(*verdict.feedback);
        obs += "\nFix repro.sh and submit again.";
        return obs;
    }
    case OutputVerdictKind::Success:
        return "Output check passed.";
    }
    return "";
}

struct EpisodeRuntime {
    Session session;
    FormatTool format_tool;
    std::set<std::string> baseline_files;

    EpisodeRuntime(const AgentConfig& config, ChatClient& chat)
        : session(config.sandbox), format_tool(chat, config.format) {}
};

std::vector<FileProvenance> workspace_provenance(const fs::path& workspace,
                                                 const std::set<std::string>& baseline) {
    std::vector<FileProvenance> out;
    for (const auto& rel : list_files_recursive(workspace))
        out.push_back({rel, baseline.count(rel) > 0});
    return out;
}

fs::path resolve_against_cwd(const Session& session, const std::string& path) {
    fs::path p(path);
    return p.is_absolute() ? p : session.cwd() / p;
}

} // namespace

void Task::validate() const {
    if (id.empty()) throw ConfigError("task has no id");
    if (step_limit <= 0) throw ConfigError("task " + id + ": step_limit must be positive");
    if (cost_limit <= 0) throw ConfigError("task " + id + ": cost_limit must be positive");
    if (time_limit.count() <= 0)
        throw ConfigError("task " + id + ": time_limit must be positive");
    if (expected_table.empty() || expected_table.body_row_count() == 0)
        throw ConfigError("task " + id + ": expected table has no body rows");
}

std::string step_to_jsonl(const StepRecord& step) {
    json j;
    j["step_index"] = step.index;
    j["thought"] = step.thought;
    j["action"] = step.action;
    j["observation"] = step.observation;
    j["cost_delta"] = step.cost_delta;
    j["wall_ms"] = step.wall_ms;
    if (step.output_verdict || step.method_verdict) {
        json v;
        if (step.output_verdict) v["output"] = output_verdict_name(*step.output_verdict);
        if (step.method_verdict) v["method"] = method_verdict_name(*step.method_verdict);
        j["verdicts"] = std::move(v);
    }
    return j.dump();
}

PromptPair construct_prompt(const Task& task, const MaskedTable& masked,
                            const ArtifactBundle& bundle, std::size_t char_budget) {
    std::string user;
    user += "Reproduce the target table below from the research artifact.\n\n";
    user += "Target table (unknown digits appear as '?'); a copy is saved at table.md:\n\n";
    user += "```\n" + render_table(masked) + "```\n\n";

    user += "Artifact (downloaded from " + task.artifact_url + " into artifact/):\n";
    for (const auto& file : bundle.files)
        user += "  artifact/" + file.remote_name + " (" + human_size(file.byte_size) + ")\n";
    if (!bundle.readme_name.empty()) {
        auto bang = bundle.readme_name.find("!/");
        if (bang == std::string::npos) {
            user += "README: artifact/" + bundle.readme_name + "\n";
        } else {
            user += "README: " + bundle.readme_name.substr(bang + 2) + " inside artifact/" +
                    bundle.readme_name.substr(0, bang) + " (unpack it first)\n";
        }
    } else {
        user += "README: no README file was found in the artifact.\n";
    }

    user += "\nWorkflow:\n";
    user += "1. The artifact is already downloaded (inventory above).\n";
    user += "2. Read the README.\n";
    user += "3. Find the commands relevant to the target table.\n";
    user += "4. Run them and check their outputs; `format --table <file> --log <file>` helps "
            "shape raw output into the table.\n";
    user += "5. Write repro.sh so it regenerates the table into repro_output.md, test it, then "
            "submit with `echo COMPLETE_TASK_AND_SUBMIT_FINAL_OUTPUT`.\n";

    user += "\nPaper text:\n\n";
    const std::string& system = agent_system_prompt();
    std::size_t overhead = system.size() + user.size() + 64;
    std::size_t paper_budget = char_budget > overhead ? char_budget - overhead : 0;
    user += truncate_middle(task.paper_text, paper_budget);
    user += "\n";

    return {{Role::System, system}, {Role::User, user}};
}

Episode run_episode(const Task& task, AgentDeps& deps, const AgentConfig& config) {
    task.validate();
    Episode episode;
    episode.task_id = task.id;

    const auto start = Clock::now();
    const auto deadline = start + task.time_limit;
    auto remaining = [&]() {
        return std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    };

    fs::path episode_dir;
    std::ofstream trajectory;
    if (!config.out_dir.empty()) {
        episode_dir = config.out_dir / task.id;
        fs::create_directories(episode_dir);
        trajectory.open(episode_dir / "trajectory.jsonl", std::ios::trunc);
    }

    auto exhaust = [&](const std::string& reason) {
        episode.status = EpisodeStatus::Exhausted;
        episode.exhausted_reason = reason;
    };

    try {
        MaskedTable masked = obfuscate_table(task.expected_table);
        ArtifactBundle bundle = deps.fetcher.fetch(task.artifact_url, task.base_dir);
        if (!bundle.complete) {
            std::string why = "artifact download incomplete:";
            for (const auto& f : bundle.failures) why += " " + f.name + " (" + f.reason + ");";
            throw FetchError(why);
        }

        EpisodeRuntime rt(config, deps.chat);
        Fetcher::materialize(bundle, rt.session.workspace() / "artifact");
        write_file(rt.session.workspace() / "table.md", render_table(masked));
        for (const auto& rel : list_files_recursive(rt.session.workspace()))
            rt.baseline_files.insert(rel);

        PromptPair prompt = construct_prompt(task, masked, bundle, config.prompt_char_budget);
        std::vector<Message> messages{prompt.system, prompt.user};

        std::string judge_context = "Artifact source: " + task.artifact_url + ". README: " +
                                    (bundle.readme_name.empty() ? "none" : bundle.readme_name) +
                                    ".";

        int steps = 0;
        while (steps < task.step_limit) {
            if (deps.meter.exhausted()) {
                exhaust("cost limit");
                break;
            }
            if (remaining().count() <= 0) {
                exhaust("time limit");
                break;
            }

            const auto step_start = Clock::now();
            const double cost_before = deps.meter.total();
            StepRecord rec;
            rec.index = steps;

            Completion completion;
            try {
                completion = deps.chat.complete(messages);
            } catch (const BudgetExhausted&) {
                exhaust("cost limit");
                break;
            } catch (const LlmError& e) {
                exhaust(std::string("llm error: ") + e.what());
                break;
            }
            messages.push_back({Role::Assistant, completion.text});

            std::string observation;
            try {
                StepParseResult parsed = parse_step(completion.text);
                if (!parsed.step) {
                    observation = corrective_observation(parsed.violation);
                } else if (parsed.step->is_submit()) {
                    rec.thought = parsed.step->thought;
                    rec.action = parsed.step->action;
                    ++episode.submissions;

                    Snapshot snapshot = rt.session.snapshot();
                    JudgeConfig jc = config.judge;
                    jc.run_timeout = std::min(jc.run_timeout, std::max(remaining(),
                                              std::chrono::milliseconds(1)));
                    OutputVerdict verdict =
                        judge_output(snapshot, task.expected_table, deps.engine, jc);
                    episode.last_output_verdict = verdict.kind;
                    rec.output_verdict = verdict.kind;
                    if (fs::exists(snapshot.root / kScriptFileName))
                        episode.last_submitted_script =
                            read_file(snapshot.root / kScriptFileName);

                    if (verdict.kind != OutputVerdictKind::Success) {
                        observation = render_verdict_observation(verdict);
                    } else {
                        MethodVerdict method = judge_method(
                            *episode.last_submitted_script,
                            workspace_provenance(rt.session.workspace(), rt.baseline_files),
                            judge_context, deps.chat, config.method_judge);
                        episode.last_method_verdict = method.kind;
                        rec.method_verdict = method.kind;
                        if (method.kind == MethodVerdictKind::CopiedResults) {
                            observation = "WARNING: Method rejected (copied results). " +
                                          method.rationale +
                                          "\nProduce the results by actually exercising the "
                                          "artifact, then submit again.";
                        } else {
                            episode.status = EpisodeStatus::Finished;
                            episode.final_script = episode.last_submitted_script;
                            observation = "Submission accepted (" +
                                          method_verdict_name(method.kind) + "). " +
                                          method.rationale;
                        }
                    }
                } else {
                    rec.thought = parsed.step->thought;
                    rec.action = parsed.step->action;
                    if (is_format_command(parsed.step->action)) {
                        observation = [&] {
                            std::string error;
                            auto cmd = parse_format_command(parsed.step->action, &error);
                            if (!cmd) return "format tool error: " + error;
                            fs::path table_file =
                                resolve_against_cwd(rt.session, cmd->table_path);
                            fs::path log_file = resolve_against_cwd(rt.session, cmd->log_path);
                            if (!fs::exists(table_file))
                                return "format tool error: no such file: " + cmd->table_path;
                            if (!fs::exists(log_file))
                                return "format tool error: no such file: " + cmd->log_path;
                            FormatRequest req;
                            try {
                                req.masked = MaskedTable{parse_table(read_file(table_file))};
                            } catch (const ParseError& e) {
                                return "format tool error: " + cmd->table_path +
                                       " is not a table: " + e.what();
                            }
                            req.raw_output = read_file(log_file);
                            req.model_id = config.format.model_id;
                            FormatTool::Outcome outcome = rt.format_tool.run(req);
                            if (!outcome.ok) return "format tool error: " + outcome.error;
                            std::string rendered = render_table(outcome.table);
                            std::string obs = "Formatted table:\n\n" + rendered;
                            if (!cmd->out_path.empty()) {
                                fs::path out_file =
                                    resolve_against_cwd(rt.session, cmd->out_path);
                                write_file(out_file, rendered);
                                obs += "\n(written to " + cmd->out_path + ")";
                            }
                            return obs;
                        }();
                    } else {
                        auto timeout = std::min(config.sandbox.command_timeout,
                                                std::max(remaining(),
                                                         std::chrono::milliseconds(1)));
                        observation = bash_tool(rt.session, parsed.step->action, timeout,
                                                config.sandbox.observation_cap);
                    }
                }
            } catch (const BudgetExhausted&) {
                exhaust("cost limit");
                break;
            } catch (const LlmError& e) {
                exhaust(std::string("llm error: ") + e.what());
                break;
            }

            messages.push_back({Role::User, observation});
            rec.observation = observation;
            rec.cost_delta = deps.meter.total() - cost_before;
            rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                                                step_start)
                              .count();
            episode.transcript.push_back(rec);
            if (trajectory.is_open()) trajectory << step_to_jsonl(rec) << "\n";
            ++steps;
            if (episode.status == EpisodeStatus::Finished) break;
        }

        if (episode.status == EpisodeStatus::Running) exhaust("step limit");
    } catch (const BudgetExhausted&) {
        exhaust("cost limit");
    } catch (const Error& e) {
        exhaust(e.what());
    }

    episode.total_cost = deps.meter.total();
    episode.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();

    if (!episode_dir.empty()) {
        // Emit the accepted script, or the last submitted one labeled with
        // its failing verdict, for the batch report.
        if (episode.final_script) {
            write_file(episode_dir / kScriptFileName, *episode.final_script);
        } else if (episode.last_submitted_script) {
            write_file(episode_dir / kScriptFileName, *episode.last_submitted_script);
        }
        json v;
        v["task_id"] = episode.task_id;
        v["status"] = episode.status == EpisodeStatus::Finished ? "finished" : "exhausted";
        if (!episode.exhausted_reason.empty()) v["reason"] = episode.exhausted_reason;
        if (episode.last_output_verdict)
            v["output_verdict"] = output_verdict_name(*episode.last_output_verdict);
        if (episode.last_method_verdict)
            v["method_verdict"] = method_verdict_name(*episode.last_method_verdict);
        v["steps_used"] = static_cast<int>(episode.transcript.size());
        v["cost"] = episode.total_cost;
        v["submissions"] = episode.submissions;
        write_file(episode_dir / "verdict.json", v.dump(2) + "\n");
    }
    return episode;
}

} // namespace artisan
