#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace artisan {

// Submission contract: the agent's script and its output table live at these
// paths relative to the workspace root.
inline constexpr std::string_view kScriptFileName = "repro.sh";
inline constexpr std::string_view kOutputFileName = "repro_output.md";

struct SandboxConfig {
    /// Parent for session/judge temp dirs; system temp when empty.
    std::filesystem::path work_root;
    std::size_t observation_cap = 20'000; // chars, per stream
    double head_fraction = 0.6;
    std::chrono::milliseconds command_timeout{120'000};
    std::chrono::milliseconds kill_grace{2'000};
    bool keep_workspace = false;
};

struct ExecResult {
    int exit_code = -1;
    std::string stdout_text;
    std::string stderr_text;
    std::chrono::milliseconds wall_time{0};
    bool truncated = false;
    bool timed_out = false;
};

/// Immutable copy of a workspace; judge runs are seeded from snapshots only,
/// never from the live session.
struct Snapshot {
    std::filesystem::path root;
    std::string digest() const;
};

/// A persistent per-episode shell workspace. Commands run one at a time via
/// /bin/sh; cwd and exported environment variables carry over between
/// commands. The workspace directory is destroyed with the session unless
/// keep_workspace is set.
class Session {
public:
    explicit Session(SandboxConfig config);
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;
    ~Session();

    const std::string& id() const { return id_; }
    const std::filesystem::path& workspace() const { return workspace_; }
    const std::filesystem::path& cwd() const { return cwd_; }
    const std::map<std::string, std::string>& env() const { return env_; }
    bool alive() const { return alive_; }

    /// Run one command. Output is captured per stream and truncated to the
    /// observation cap with head+tail retention; on timeout the partial
    /// output is returned with the timed_out flag set.
    ExecResult exec(const std::string& command,
                    std::optional<std::chrono::milliseconds> timeout = std::nullopt);

    /// Copy the workspace into an immutable snapshot under the session root.
    Snapshot snapshot();

    void close();

private:
    SandboxConfig config_;
    std::string id_;
    std::filesystem::path root_;
    std::filesystem::path workspace_;
    std::filesystem::path state_dir_;
    std::filesystem::path cwd_;
    std::map<std::string, std::string> env_;
    bool alive_ = false;
    int command_seq_ = 0;
    int snapshot_seq_ = 0;
};

inline Snapshot snapshot_workspace(Session& session) { return session.snapshot(); }

/// Non-executing `sh -n` pass; distinguishes static (syntax) errors from
/// runtime failures.
ExecResult syntax_check(const std::filesystem::path& script);

struct IsolatedResult {
    bool script_missing = false;
    ExecResult exec;
    std::optional<std::string> output; // contents of repro_output.md, if produced
    std::filesystem::path run_dir;     // where the fresh copy ran (for path scrubbing)
};

/// Runs the submitted script in a fresh environment seeded from a snapshot.
class ExecutionEngine {
public:
    virtual ~ExecutionEngine() = default;
    virtual IsolatedResult run(const Snapshot& snapshot,
                               std::chrono::milliseconds timeout) = 0;
    virtual std::string name() const = 0;
};

/// Plain-subprocess engine: copies the snapshot into a scratch directory and
/// runs `sh repro.sh` there with a minimal environment. Used in CI and
/// anywhere a container daemon is unavailable.
class SubprocessEngine : public ExecutionEngine {
public:
    explicit SubprocessEngine(SandboxConfig config = {});
    IsolatedResult run(const Snapshot& snapshot, std::chrono::milliseconds timeout) override;
    std::string name() const override { return "subprocess"; }

private:
    SandboxConfig config_;
};

/// Container-backed engine; the default in production setups where research
/// artifacts expect a Docker-style environment.
class ContainerEngine : public ExecutionEngine {
public:
    struct Config {
        std::string cli = "docker";
        std::string image = "ubuntu:24.04";
        std::vector<std::string> extra_args; // inserted before the image name
        SandboxConfig sandbox;
    };

    explicit ContainerEngine(Config config);
    IsolatedResult run(const Snapshot& snapshot, std::chrono::milliseconds timeout) override;
    std::string name() const override { return "container"; }

private:
    Config config_;
};

/// The container invocation, exposed for testing without a daemon.
std::vector<std::string> container_run_argv(const ContainerEngine::Config& config,
                                            const std::filesystem::path& run_dir);

} // namespace artisan
