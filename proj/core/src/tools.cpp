#include "artisan/tools.hpp"

#include <sstream>

#include "artisan/errors.hpp"
#include "artisan/prompts.hpp"
#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace artisan {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool has_placeholders(const MaskedTable& masked) {
    const Table& t = masked.base;
    for (std::size_t i = t.header_rows; i < t.rows.size(); ++i)
        for (const auto& cell : t.rows[i])
            if (cell.find('?') != std::string::npos) return true;
    return false;
}

/// Pull the fenced block out of an assistant reply, or fall back to the full
/// text when there is no fence.
std::string extract_block(const std::string& text) {
    auto lines = split_lines(text);
    std::string block;
    bool in_fence = false;
    bool saw_fence = false;
    for (const auto& line : lines) {
        if (trim(line).rfind("```", 0) == 0) {
            if (in_fence) break;
            in_fence = true;
            saw_fence = true;
            continue;
        }
        if (in_fence) {
            block += line;
            block += '\n';
        }
    }
    return saw_fence ? block : text;
}

} // namespace

std::string bash_tool(Session& session, const std::string& command,
                      std::optional<std::chrono::milliseconds> timeout,
                      std::size_t observation_cap) {
    ExecResult res = session.exec(command, timeout);

    std::string obs = "exit code: " + std::to_string(res.exit_code);
    if (res.timed_out)
        obs += " (timed out after " + format_duration(res.wall_time) + "; process killed)";
    obs += "\n--- stdout ---\n";
    obs += res.stdout_text;
    if (!obs.empty() && obs.back() != '\n') obs += '\n';
    obs += "--- stderr ---\n";
    obs += res.stderr_text;
    while (!obs.empty() && obs.back() == '\n') obs.pop_back();
    return truncate_middle(obs, observation_cap);
}

std::string FormatRequest::cache_key() const {
    std::string canon = render_table(masked);
    canon += '\x1e';
    canon += raw_output;
    canon += '\x1e';
    canon += model_id;
    return sha256_hex(canon);
}

std::optional<std::string> validate_fill(const MaskedTable& masked, const Table& filled) {
    const Table& m = masked.base;
    if (filled.row_count() != m.row_count() || filled.col_count() != m.col_count())
        return "table shape changed: expected " + std::to_string(m.row_count()) + "x" +
               std::to_string(m.col_count()) + ", got " + std::to_string(filled.row_count()) +
               "x" + std::to_string(filled.col_count());
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        for (std::size_t j = 0; j < m.rows[i].size(); ++j) {
            const std::string& mc = m.rows[i][j];
            const std::string& fc = filled.rows[i][j];
            if (mc.size() != fc.size())
                return "cell (" + std::to_string(i) + "," + std::to_string(j) +
                       ") changed width: \"" + mc + "\" -> \"" + fc + "\"";
            for (std::size_t k = 0; k < mc.size(); ++k) {
                if (mc[k] == '?') {
                    if (fc[k] != '?' && !is_digit(fc[k]))
                        return "cell (" + std::to_string(i) + "," + std::to_string(j) +
                               ") put a non-digit at a '?' position: \"" + fc + "\"";
                } else if (mc[k] != fc[k]) {
                    return "cell (" + std::to_string(i) + "," + std::to_string(j) +
                           ") altered text outside the '?' positions: \"" + mc + "\" -> \"" +
                           fc + "\"";
                }
            }
        }
    }
    return std::nullopt;
}

FormatTool::FormatTool(ChatClient& client, Config config)
    : client_(client), config_(std::move(config)) {}

FormatTool::Outcome FormatTool::run(const FormatRequest& request) {
    // Nothing to fill: the masked table passes through without an LLM call.
    if (!has_placeholders(request.masked)) return {true, request.masked.base, ""};

    fs::path cache_file;
    if (config_.cache_enabled && !config_.cache_dir.empty()) {
        cache_file = config_.cache_dir / "format" / request.cache_key();
        if (fs::exists(cache_file)) {
            try {
                return {true, parse_table(read_file(cache_file)), ""};
            } catch (const ParseError&) {
                fs::remove(cache_file); // corrupt cache entry: fall through
            }
        }
    }

    std::vector<Message> messages{
        {Role::System, format_tool_prompt()},
        {Role::User, "Obfuscated table:\n\n```\n" + render_table(request.masked) +
                         "```\n\nExecution output:\n\n```\n" + request.raw_output +
                         "\n```\n\nFill in the '?' digits."},
    };

    std::string last_violation;
    for (int attempt = 0; attempt < 2; ++attempt) {
        Completion c = client_.complete(messages);
        ++llm_calls_;
        Table filled;
        try {
            filled = parse_table(extract_block(c.text));
        } catch (const ParseError& e) {
            last_violation = std::string("reply is not a table: ") + e.what();
            messages.push_back({Role::Assistant, c.text});
            messages.push_back({Role::User, "Your reply violated the shape contract: " +
                                                last_violation +
                                                ". Reply with the corrected table only."});
            continue;
        }
        // Cell comparison ignores the caption; carry the mask's caption over
        // so cached renders stay byte-stable.
        filled.caption = request.masked.base.caption;
        if (auto violation = validate_fill(request.masked, filled)) {
            last_violation = *violation;
            messages.push_back({Role::Assistant, c.text});
            messages.push_back({Role::User, "Your table violated the shape contract: " +
                                                *violation +
                                                ". Reply with the corrected table only."});
            continue;
        }
        if (!cache_file.empty()) write_file_atomic(cache_file, render_table(filled));
        return {true, filled, ""};
    }
    return {false, {}, "format tool failed twice against the shape contract: " + last_violation};
}

bool is_format_command(const std::string& action) {
    std::string t = trim(action);
    return t == "format" || t.rfind("format ", 0) == 0;
}

std::optional<FormatCommand> parse_format_command(const std::string& action,
                                                  std::string* error) {
    auto fail = [&](const std::string& msg) -> std::optional<FormatCommand> {
        if (error) *error = msg;
        return std::nullopt;
    };
    if (!is_format_command(action)) return fail("not a format command");

    std::istringstream in(trim(action));
    std::string tok;
    in >> tok; // "format"
    FormatCommand cmd;
    while (in >> tok) {
        std::string* target = nullptr;
        if (tok == "--table")
            target = &cmd.table_path;
        else if (tok == "--log")
            target = &cmd.log_path;
        else if (tok == "--out")
            target = &cmd.out_path;
        else
            return fail("unknown format option: " + tok +
                        " (usage: format --table <file> --log <file> [--out <file>])");
        if (!(in >> *target)) return fail("missing value after " + tok);
    }
    if (cmd.table_path.empty() || cmd.log_path.empty())
        return fail("usage: format --table <file> --log <file> [--out <file>]");
    return cmd;
}

} // namespace artisan
