#include "artisan/judge.hpp"

#include "json.hpp"

#include "artisan/errors.hpp"
#include "artisan/prompts.hpp"
#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace artisan {

namespace {

using nlohmann::json;

/// Volatile sandbox paths in diagnostics would leak nondeterminism into
/// transcripts; replace them with a stable placeholder.
std::string scrub_paths(std::string text, const IsolatedResult& run, const Snapshot& snapshot) {
    if (!run.run_dir.empty()) text = replace_all(std::move(text), run.run_dir.string(), "<workspace>");
    if (!snapshot.root.empty())
        text = replace_all(std::move(text), snapshot.root.string(), "<workspace>");
    return text;
}

std::string stderr_tail(const std::string& stderr_text, std::size_t cap = 2000) {
    if (stderr_text.size() <= cap) return stderr_text;
    return "..." + stderr_text.substr(stderr_text.size() - cap);
}

OutputVerdict mismatch_verdict(const Table& expected, const MatchMap& map, std::string detail) {
    OutputVerdict v{OutputVerdictKind::Mismatch, std::move(detail)};
    v.feedback = render_feedback(expected, map);
    v.matches = map;
    return v;
}

std::optional<MethodVerdictKind> parse_method_kind(const std::string& text) {
    for (const auto& line : split_lines(text)) {
        std::string t = trim(line);
        if (!starts_with_ci(t, "VERDICT:")) continue;
        std::string value = to_lower(trim(t.substr(8)));
        if (value == "copiedresults" || value == "copied results" || value == "copied-results")
            return MethodVerdictKind::CopiedResults;
        if (value == "lastmile" || value == "last mile" || value == "last-mile")
            return MethodVerdictKind::LastMile;
        if (value == "fullreproduction" || value == "full reproduction" ||
            value == "full-reproduction")
            return MethodVerdictKind::FullReproduction;
    }
    return std::nullopt;
}

std::string parse_rationale(const std::string& text) {
    for (const auto& line : split_lines(text)) {
        std::string t = trim(line);
        if (starts_with_ci(t, "RATIONALE:")) {
            std::string r = trim(t.substr(10));
            if (!r.empty()) return r;
        }
    }
    return "no rationale given";
}

} // namespace

std::string output_verdict_name(OutputVerdictKind kind) {
    switch (kind) {
    case OutputVerdictKind::StaticError: return "StaticError";
    case OutputVerdictKind::RuntimeError: return "RuntimeError";
    case OutputVerdictKind::Mismatch: return "Mismatch";
    case OutputVerdictKind::Success: return "Success";
    }
    return "unknown";
}

std::string method_verdict_name(MethodVerdictKind kind) {
    switch (kind) {
    case MethodVerdictKind::CopiedResults: return "CopiedResults";
    case MethodVerdictKind::LastMile: return "LastMile";
    case MethodVerdictKind::FullReproduction: return "FullReproduction";
    }
    return "unknown";
}

OutputVerdict judge_output(const Snapshot& snapshot, const Table& expected,
                           ExecutionEngine& engine, const JudgeConfig& config) {
    const fs::path script = snapshot.root / kScriptFileName;
    if (!fs::exists(script))
        return {OutputVerdictKind::StaticError,
                std::string(kScriptFileName) + " is missing from the expected path"};

    ExecResult syntax = syntax_check(script);
    if (syntax.exit_code != 0) {
        std::string detail = replace_all(syntax.stderr_text, script.string(),
                                         std::string(kScriptFileName));
        return {OutputVerdictKind::StaticError,
                std::string(kScriptFileName) + " fails the shell syntax check: " +
                    trim(detail)};
    }

    IsolatedResult run = engine.run(snapshot, config.run_timeout);
    if (run.script_missing)
        return {OutputVerdictKind::StaticError,
                std::string(kScriptFileName) + " is missing from the expected path"};
    if (run.exec.timed_out)
        return {OutputVerdictKind::RuntimeError,
                "script timed out after " + format_duration(run.exec.wall_time)};
    if (run.exec.exit_code != 0)
        return {OutputVerdictKind::RuntimeError,
                "script exited with code " + std::to_string(run.exec.exit_code) + ": " +
                    trim(scrub_paths(stderr_tail(run.exec.stderr_text), run, snapshot))};
    if (!run.output)
        return {OutputVerdictKind::RuntimeError,
                "script completed but produced no output file (" +
                    std::string(kOutputFileName) + ")"};

    Table actual;
    try {
        actual = parse_table(*run.output);
    } catch (const ParseError& e) {
        // Ran fine but the result is not a table: report it as mismatched
        // results with the fully masked expected table as feedback.
        MatchMap structural;
        structural.rows = expected.row_count();
        structural.cols = expected.col_count();
        structural.structural_mismatch = true;
        structural.matched.assign(structural.rows,
                                  std::vector<bool>(structural.cols, false));
        return mismatch_verdict(expected, structural,
                                std::string("output is not a well-formed table: ") + e.what());
    }

    MatchMap map = compare_tables(expected, actual, config.compare);
    if (map.structural_mismatch)
        return mismatch_verdict(expected, map,
                                "table shape differs: expected " +
                                    std::to_string(expected.row_count()) + "x" +
                                    std::to_string(expected.col_count()) + ", got " +
                                    std::to_string(actual.row_count()) + "x" +
                                    std::to_string(actual.col_count()));
    if (!map.all_matched())
        return mismatch_verdict(expected, map,
                                std::to_string(map.matched_count()) + "/" +
                                    std::to_string(map.cell_count()) + " cells matched");

    OutputVerdict v{OutputVerdictKind::Success, "all cells matched"};
    v.actual = actual;
    return v;
}

MethodVerdict judge_method(const std::string& script_text,
                           const std::vector<FileProvenance>& inventory,
                           const std::string& context, ChatClient& client,
                           const MethodJudgeConfig& config) {
    std::string inventory_text;
    for (const auto& f : inventory) {
        inventory_text += "  " + f.path;
        if (config.include_provenance)
            inventory_text += f.pre_existing ? "  [pre-existing]" : "  [created during episode]";
        inventory_text += "\n";
    }

    fs::path cache_file;
    if (config.cache_enabled && !config.cache_dir.empty()) {
        std::string key = sha256_hex(sha256_hex(script_text) + sha256_hex(inventory_text) +
                                     std::to_string(kPromptVersion));
        cache_file = config.cache_dir / "judge" / (key + ".json");
        if (fs::exists(cache_file)) {
            try {
                json j = json::parse(read_file(cache_file));
                auto kind = parse_method_kind("VERDICT: " + j.at("kind").get<std::string>());
                if (kind) return {*kind, j.at("rationale").get<std::string>()};
            } catch (const std::exception&) {
                fs::remove(cache_file);
            }
        }
    }

    std::string user = context.empty() ? "" : context + "\n\n";
    user += "Reproduction script (" + std::string(kScriptFileName) + "):\n\n```sh\n" +
            script_text + "\n```\n";
    if (!inventory.empty()) user += "\nWorkspace files:\n" + inventory_text;
    user += "\nClassify the reproduction method.";

    std::vector<Message> messages{{Role::System, method_judge_prompt()}, {Role::User, user}};

    MethodVerdict verdict{MethodVerdictKind::CopiedResults,
                          "method judge response unparseable after retry; failing closed"};
    for (int attempt = 0; attempt < 2; ++attempt) {
        Completion c = client.complete(messages);
        auto kind = parse_method_kind(c.text);
        if (kind) {
            verdict = {*kind, parse_rationale(c.text)};
            break;
        }
        messages.push_back({Role::Assistant, c.text});
        messages.push_back({Role::User,
                            "Reply in exactly this format:\nVERDICT: "
                            "<CopiedResults|LastMile|FullReproduction>\nRATIONALE: <one or two "
                            "sentences>"});
    }

    if (!cache_file.empty()) {
        json j;
        j["kind"] = method_verdict_name(verdict.kind);
        j["rationale"] = verdict.rationale;
        write_file_atomic(cache_file, j.dump());
    }
    return verdict;
}

} // namespace artisan
