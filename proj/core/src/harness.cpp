#include "artisan/harness.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "artisan/errors.hpp"
#include "artisan/toml.hpp"
#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace artisan {

namespace {

using nlohmann::ordered_json;

const std::array<Category, kCategoryCount> kCategoryOrder = {
    Category::FullReproduction, Category::LastMile,     Category::CopiedResults,
    Category::MismatchedResults, Category::RuntimeError, Category::StaticError,
};

std::map<std::string, TomlValue> load_manifest_toml(const fs::path& dir) {
    fs::path manifest = dir / "task.toml";
    if (!fs::exists(manifest))
        throw ConfigError("task manifest is missing task.toml: " + dir.string());
    try {
        return parse_toml_lite(read_file(manifest));
    } catch (const ParseError& e) {
        throw ConfigError(manifest.string() + ": " + e.what());
    }
}

} // namespace

std::string category_name(Category c) {
    switch (c) {
    case Category::FullReproduction: return "FullReproduction";
    case Category::LastMile: return "LastMile";
    case Category::CopiedResults: return "CopiedResults";
    case Category::MismatchedResults: return "MismatchedResults";
    case Category::RuntimeError: return "RuntimeError";
    case Category::StaticError: return "StaticError";
    }
    return "unknown";
}

Task load_task(const fs::path& manifest_dir) {
    for (const char* required : {"table.md", "paper.txt", "task.toml"})
        if (!fs::exists(manifest_dir / required))
            throw ConfigError("task manifest is missing " + std::string(required) + ": " +
                              manifest_dir.string());

    Task task;
    task.base_dir = manifest_dir;
    task.id = manifest_dir.filename().string();
    if (task.id.empty()) task.id = manifest_dir.parent_path().filename().string();

    try {
        task.expected_table = parse_table(read_file(manifest_dir / "table.md"));
    } catch (const ParseError& e) {
        throw ConfigError((manifest_dir / "table.md").string() + ": " + e.what());
    }
    task.paper_text = read_file(manifest_dir / "paper.txt");

    auto values = load_manifest_toml(manifest_dir);
    auto it = values.find("url");
    if (it == values.end() || it->second.kind != TomlValue::Kind::String)
        throw ConfigError((manifest_dir / "task.toml").string() +
                          ": required string key \"url\" is missing");
    task.artifact_url = it->second.str;

    if (auto v = values.find("id"); v != values.end()) task.id = v->second.str;
    if (auto v = values.find("step_limit"); v != values.end())
        task.step_limit = static_cast<int>(v->second.as_number());
    if (auto v = values.find("cost_limit"); v != values.end())
        task.cost_limit = v->second.as_number();
    if (auto v = values.find("time_limit"); v != values.end()) {
        if (v->second.kind == TomlValue::Kind::String)
            task.time_limit = parse_duration(v->second.str);
        else
            task.time_limit =
                std::chrono::milliseconds(static_cast<std::int64_t>(v->second.as_number() * 1000));
    }
    task.validate();
    return task;
}

std::optional<fs::path> task_replay_file(const fs::path& manifest_dir) {
    auto values = load_manifest_toml(manifest_dir);
    auto it = values.find("replay");
    if (it == values.end()) return std::nullopt;
    fs::path p(it->second.str);
    return p.is_absolute() ? p : manifest_dir / p;
}

Category classify_outcome(const Episode& episode) {
    if (episode.accepted()) {
        // Acceptance implies a non-CopiedResults method verdict.
        if (episode.last_method_verdict == MethodVerdictKind::LastMile)
            return Category::LastMile;
        return Category::FullReproduction;
    }
    if (episode.last_output_verdict) {
        switch (*episode.last_output_verdict) {
        case OutputVerdictKind::Success:
            // Output matched but the method judge rejected (or never
            // produced a verdict): fail closed.
            return Category::CopiedResults;
        case OutputVerdictKind::Mismatch: return Category::MismatchedResults;
        case OutputVerdictKind::RuntimeError: return Category::RuntimeError;
        case OutputVerdictKind::StaticError: return Category::StaticError;
        }
    }
    // No submission ever occurred: no script exists at the expected path.
    return Category::StaticError;
}

std::map<std::string, ModelRates> default_model_rates() {
    // Published list prices, per million tokens; adjust with --prompt-rate /
    // --completion-rate for anything not listed.
    return {
        {"gpt-5.1", {1.25, 10.0}},
        {"gpt-5", {1.25, 10.0}},
        {"gpt-5-mini", {0.25, 2.0}},
        {"gpt-5-nano", {0.05, 0.40}},
        {"deepseek-reasoner", {0.28, 0.42}},
        {"deepseek-chat", {0.28, 0.42}},
    };
}

namespace {

ModelRates rates_for(const BatchConfig& config) {
    auto rates = config.rates.empty() ? default_model_rates() : config.rates;
    auto it = rates.find(config.model_id);
    if (it == rates.end())
        throw ConfigError("no cost rates configured for model \"" + config.model_id +
                          "\"; pass --prompt-rate and --completion-rate");
    return it->second;
}

std::unique_ptr<ExecutionEngine> make_engine(const BatchConfig& config) {
    if (config.engine == "subprocess")
        return std::make_unique<SubprocessEngine>(config.sandbox);
    if (config.engine == "container") {
        ContainerEngine::Config cc;
        cc.image = config.container_image;
        cc.sandbox = config.sandbox;
        return std::make_unique<ContainerEngine>(cc);
    }
    throw ConfigError("unknown execution engine \"" + config.engine +
                      "\" (expected subprocess or container)");
}

RunRecord record_from_episode(const Episode& episode, const BatchConfig& config) {
    RunRecord rec;
    rec.task_id = episode.task_id;
    rec.category = classify_outcome(episode);
    rec.cost = episode.total_cost;
    rec.wall_ms = episode.wall_ms;
    rec.steps_used = static_cast<int>(episode.transcript.size());
    if (!config.out_dir.empty() &&
        (episode.final_script || episode.last_submitted_script))
        rec.script_path = fs::path(episode.task_id) / kScriptFileName;
    return rec;
}

} // namespace

void validate_batch_config(const BatchConfig& config) {
    rates_for(config);
    if (config.engine != "subprocess" && config.engine != "container")
        throw ConfigError("unknown execution engine \"" + config.engine +
                          "\" (expected subprocess or container)");
    if (config.replay_file && !fs::exists(*config.replay_file))
        throw ConfigError("replay fixture does not exist: " + config.replay_file->string());
}

RunRecord run_task(const fs::path& manifest_dir, const BatchConfig& config) {
    RunRecord rec;
    rec.task_id = manifest_dir.filename().string();
    try {
        Task task = load_task(manifest_dir);
        rec.task_id = task.id;
        if (config.step_limit_override) task.step_limit = *config.step_limit_override;
        if (config.cost_limit_override) task.cost_limit = *config.cost_limit_override;
        if (config.time_limit_override) task.time_limit = *config.time_limit_override;

        ModelRates rates = rates_for(config);

        // Backend: per-task replay fixture beats the batch-level one beats a
        // live HTTP client.
        std::unique_ptr<ChatClient> inner;
        auto replay = task_replay_file(manifest_dir);
        if (!replay && config.replay_file) replay = config.replay_file;
        bool replay_mode = replay.has_value();
        if (replay) {
            inner = std::make_unique<ReplayChatClient>(*replay);
        } else {
            HttpChatClient::Config hc;
            hc.base_url = config.api_base;
            hc.model = config.model_id;
            hc.api_key = config.api_key;
            inner = std::make_unique<HttpChatClient>(hc);
        }
        std::unique_ptr<RecordingChatClient> recorder;
        ChatClient* backend = inner.get();
        if (config.record_file) {
            recorder = std::make_unique<RecordingChatClient>(*inner, *config.record_file);
            backend = recorder.get();
        }

        CostMeter meter(task.cost_limit);
        MeteredClient chat(*backend, rates, meter);

        FetchConfig fc;
        fc.cache_dir = config.cache_dir.empty() ? config.out_dir / "cache" : config.cache_dir;
        Fetcher fetcher(fc);

        auto engine = make_engine(config);

        AgentConfig ac;
        ac.sandbox = config.sandbox;
        ac.judge.run_timeout = config.judge_run_timeout;
        ac.judge.compare = config.compare;
        ac.method_judge.cache_dir = fc.cache_dir;
        // Replay is itself a response cache; double caching would desync the
        // fixture's turn order on repeat runs.
        ac.method_judge.cache_enabled = !replay_mode;
        ac.method_judge.include_provenance = config.method_judge_provenance;
        ac.format.cache_dir = fc.cache_dir;
        ac.format.cache_enabled = !replay_mode;
        ac.format.model_id = config.model_id;
        ac.out_dir = config.out_dir;

        AgentDeps deps{chat, fetcher, *engine, meter};
        Episode episode = run_episode(task, deps, ac);
        return record_from_episode(episode, config);
    } catch (const std::exception& e) {
        rec.category = Category::StaticError;
        rec.error = e.what();
        return rec;
    }
}

std::vector<fs::path> discover_tasks(const fs::path& root) {
    std::vector<fs::path> out;
    if (fs::exists(root / "task.toml")) {
        out.push_back(root);
        return out;
    }
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "task.toml"))
            out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

BatchReport run_batch(const std::vector<fs::path>& task_dirs, const BatchConfig& config) {
    std::vector<RunRecord> records(task_dirs.size());
    std::mutex queue_mutex;
    std::size_t next = 0;

    int workers = std::max(1, config.parallelism);
    workers = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(workers), task_dirs.size()));
    std::vector<std::thread> pool;
    auto work = [&] {
        while (true) {
            std::size_t index;
            {
                std::lock_guard lock(queue_mutex);
                if (next >= task_dirs.size()) return;
                index = next++;
            }
            records[index] = run_task(task_dirs[index], config);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return summarize(std::move(records));
}

BatchReport summarize(std::vector<RunRecord> records) {
    BatchReport report;
    std::sort(records.begin(), records.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.task_id < b.task_id; });
    report.tasks = static_cast<int>(records.size());
    double cost_sum = 0.0;
    double wall_sum_s = 0.0;
    bool all_accepted = !records.empty();
    for (const auto& rec : records) {
        report.counts[static_cast<std::size_t>(rec.category)] += 1;
        cost_sum += rec.cost;
        wall_sum_s += static_cast<double>(rec.wall_ms / 1000);
        if (rec.category != Category::FullReproduction && rec.category != Category::LastMile)
            all_accepted = false;
    }
    if (report.tasks > 0) {
        report.mean_cost = cost_sum / report.tasks;
        report.mean_wall_s = wall_sum_s / report.tasks;
    }
    report.all_accepted = all_accepted;
    report.records = std::move(records);
    return report;
}

std::string report_to_json(const BatchReport& report) {
    ordered_json j;
    j["tasks"] = report.tasks;
    ordered_json counts;
    for (std::size_t i = 0; i < kCategoryCount; ++i)
        counts[category_name(kCategoryOrder[i])] = report.counts[i];
    j["counts"] = std::move(counts);
    j["mean_cost"] = report.mean_cost;
    j["mean_time_s"] = report.mean_wall_s;
    ordered_json records = ordered_json::array();
    for (const auto& rec : report.records) {
        ordered_json r;
        r["task_id"] = rec.task_id;
        r["category"] = category_name(rec.category);
        r["cost"] = rec.cost;
        // Second granularity keeps reports byte-stable across repeat runs.
        r["wall_time_s"] = rec.wall_ms / 1000;
        r["steps_used"] = rec.steps_used;
        if (rec.script_path)
            r["script"] = rec.script_path->generic_string();
        else
            r["script"] = nullptr;
        if (!rec.error.empty()) r["error"] = rec.error;
        records.push_back(std::move(r));
    }
    j["records"] = std::move(records);
    return j.dump(2) + "\n";
}

std::string report_to_text(const BatchReport& report) {
    std::ostringstream out;
    out << "task                      category            cost      time      steps\n";
    for (const auto& rec : report.records) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-25s %-19s $%-8.4f %-9s %d\n",
                      rec.task_id.c_str(), category_name(rec.category).c_str(), rec.cost,
                      format_duration(std::chrono::milliseconds(rec.wall_ms)).c_str(),
                      rec.steps_used);
        out << line;
        if (!rec.error.empty()) out << "  error: " << rec.error << "\n";
    }
    out << "\ncounts:";
    for (std::size_t i = 0; i < kCategoryCount; ++i)
        out << " " << category_name(kCategoryOrder[i]) << "=" << report.counts[i];
    char summary[128];
    std::snprintf(summary, sizeof(summary), "\nmean cost: $%.4f   mean time: %.1fs   tasks: %d\n",
                  report.mean_cost, report.mean_wall_s, report.tasks);
    out << summary;
    return out.str();
}

} // namespace artisan
