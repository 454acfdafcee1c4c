#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include "artisan/llm.hpp"
#include "artisan/sandbox.hpp"
#include "artisan/table.hpp"

namespace artisan {

/// Run a command in the session and render the observation the agent sees:
/// exit code plus the truncated combined output.
std::string bash_tool(Session& session, const std::string& command,
                      std::optional<std::chrono::milliseconds> timeout = std::nullopt,
                      std::size_t observation_cap = 20'000);

struct FormatRequest {
    MaskedTable masked;
    std::string raw_output;
    std::string model_id;

    /// Pure function of (masked, raw_output, model_id).
    std::string cache_key() const;
};

/// Check the filled table against its mask: identical everywhere except that
/// a '?' may have become a digit (or stayed '?', when the value was not in
/// the output). Returns a description of the first violation, if any.
std::optional<std::string> validate_fill(const MaskedTable& masked, const Table& filled);

/// LLM-backed formatter: fills the '?' digits of an obfuscated table from
/// raw execution output. Responses are validated against the mask before
/// being returned (one corrective re-prompt on violation) and cached on disk
/// so identical requests are served without an LLM call.
class FormatTool {
public:
    struct Config {
        std::filesystem::path cache_dir; // shared with the fetch cache
        std::string model_id;
        bool cache_enabled = true;
    };

    struct Outcome {
        bool ok = false;
        Table table;
        std::string error;
    };

    FormatTool(ChatClient& client, Config config);
    Outcome run(const FormatRequest& request);
    int llm_calls() const { return llm_calls_; }

private:
    ChatClient& client_;
    Config config_;
    int llm_calls_ = 0;
};

/// The agent-facing command grammar: format --table <file> --log <file>
/// [--out <file>].
struct FormatCommand {
    std::string table_path;
    std::string log_path;
    std::string out_path; // empty when --out not given
};

bool is_format_command(const std::string& action);
std::optional<FormatCommand> parse_format_command(const std::string& action,
                                                  std::string* error = nullptr);

} // namespace artisan
