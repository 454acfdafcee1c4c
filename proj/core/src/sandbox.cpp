#include "artisan/sandbox.hpp"

#include <system_error>

#include "artisan/errors.hpp"
#include "artisan/process.hpp"
#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace artisan {

namespace {

std::map<std::string, std::string> base_env(const fs::path& home) {
    return {
        {"PATH", "/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin"},
        {"HOME", home.string()},
        {"LC_ALL", "C"},
        {"TERM", "dumb"},
    };
}

std::vector<std::string> env_to_list(const std::map<std::string, std::string>& env) {
    std::vector<std::string> out;
    out.reserve(env.size());
    for (const auto& [k, v] : env) out.push_back(k + "=" + v);
    return out;
}

ExecResult to_exec_result(const ProcessResult& p) {
    ExecResult r;
    r.exit_code = p.exit_code;
    r.stdout_text = p.stdout_text;
    r.stderr_text = p.stderr_text;
    r.wall_time = p.wall;
    r.truncated = p.truncated;
    r.timed_out = p.timed_out;
    return r;
}

fs::path scratch_root(const SandboxConfig& config) {
    return config.work_root.empty() ? fs::temp_directory_path() : config.work_root;
}

} // namespace

std::string Snapshot::digest() const { return tree_digest(root); }

Session::Session(SandboxConfig config) : config_(std::move(config)) {
    id_ = "sess-" + random_token();
    root_ = scratch_root(config_) / ("artisan-" + id_);
    workspace_ = root_ / "workspace";
    state_dir_ = root_ / "state";
    std::error_code ec;
    fs::create_directories(workspace_, ec);
    fs::create_directories(state_dir_, ec);
    if (ec) throw SandboxError("cannot create session directories: " + ec.message());
    cwd_ = workspace_;
    env_ = base_env(workspace_);
    alive_ = true;
}

Session::~Session() { close(); }

void Session::close() {
    if (!alive_) return;
    alive_ = false;
    if (config_.keep_workspace) return;
    std::error_code ec;
    fs::remove_all(root_, ec);
}

ExecResult Session::exec(const std::string& command,
                         std::optional<std::chrono::milliseconds> timeout) {
    if (!alive_) throw SandboxError("session " + id_ + " is not alive");

    // State-file technique: each command runs in a fresh sh, but cwd and the
    // exported environment are carried across commands through the state dir.
    const fs::path cwd_file = state_dir_ / "cwd";
    const fs::path env_file = state_dir_ / "env";
    const fs::path wrapper = state_dir_ / ("cmd_" + std::to_string(command_seq_++) + ".sh");

    std::string script;
    script += "cd " + shell_quote(cwd_.string()) + " || exit 97\n";
    script += command;
    script += "\n__artisan_rc=$?\n";
    script += "pwd > " + shell_quote(cwd_file.string()) + " 2>/dev/null\n";
    script += "env -0 > " + shell_quote(env_file.string()) + " 2>/dev/null\n";
    script += "exit $__artisan_rc\n";
    write_file(wrapper, script);

    ProcessOptions opt;
    opt.cwd = workspace_;
    opt.env = env_to_list(env_);
    opt.timeout = timeout.value_or(config_.command_timeout);
    opt.grace = config_.kill_grace;
    opt.stream_cap = config_.observation_cap;
    opt.head_fraction = config_.head_fraction;

    ProcessResult res = run_process({"/bin/sh", wrapper.string()}, opt);

    // Reload persisted state; commands that exit early simply leave it as-is.
    std::error_code ec;
    if (fs::exists(cwd_file, ec)) {
        std::string new_cwd = trim(read_file(cwd_file));
        if (!new_cwd.empty() && fs::is_directory(new_cwd, ec)) cwd_ = new_cwd;
    }
    if (fs::exists(env_file, ec)) {
        std::string raw = read_file(env_file);
        std::map<std::string, std::string> parsed;
        std::size_t pos = 0;
        while (pos < raw.size()) {
            std::size_t nul = raw.find('\0', pos);
            std::string entry = raw.substr(pos, nul == std::string::npos ? std::string::npos
                                                                         : nul - pos);
            pos = nul == std::string::npos ? raw.size() : nul + 1;
            auto eq = entry.find('=');
            if (eq == std::string::npos || eq == 0) continue;
            parsed[entry.substr(0, eq)] = entry.substr(eq + 1);
        }
        if (!parsed.empty()) env_ = std::move(parsed);
    }
    return to_exec_result(res);
}

Snapshot Session::snapshot() {
    if (!alive_) throw SandboxError("session " + id_ + " is not alive");
    fs::path dest = root_ / "snapshots" / ("snap-" + std::to_string(snapshot_seq_++));
    try {
        copy_tree(workspace_, dest);
    } catch (const std::exception& e) {
        throw SandboxError(std::string("workspace snapshot failed: ") + e.what());
    }
    return Snapshot{dest};
}

ExecResult syntax_check(const fs::path& script) {
    ProcessOptions opt;
    opt.timeout = std::chrono::milliseconds(30'000);
    opt.stream_cap = 20'000;
    ProcessResult res = run_process({"/bin/sh", "-n", script.string()}, opt);
    return to_exec_result(res);
}

SubprocessEngine::SubprocessEngine(SandboxConfig config) : config_(std::move(config)) {}

IsolatedResult SubprocessEngine::run(const Snapshot& snapshot,
                                     std::chrono::milliseconds timeout) {
    IsolatedResult out;
    if (!fs::exists(snapshot.root / kScriptFileName)) {
        out.script_missing = true;
        return out;
    }
    TempDir run_dir("artisan-judge-", scratch_root(config_));
    copy_tree(snapshot.root, run_dir.path());
    out.run_dir = run_dir.path();

    ProcessOptions opt;
    opt.cwd = run_dir.path();
    opt.env = env_to_list(base_env(run_dir.path()));
    opt.timeout = timeout;
    opt.grace = config_.kill_grace;
    opt.stream_cap = config_.observation_cap;
    opt.head_fraction = config_.head_fraction;

    out.exec = to_exec_result(
        run_process({"/bin/sh", std::string(kScriptFileName)}, opt));

    fs::path produced = run_dir.path() / kOutputFileName;
    if (fs::exists(produced)) out.output = read_file(produced);
    return out;
}

ContainerEngine::ContainerEngine(Config config) : config_(std::move(config)) {}

std::vector<std::string> container_run_argv(const ContainerEngine::Config& config,
                                            const fs::path& run_dir) {
    std::vector<std::string> argv{
        config.cli, "run", "--rm",
        "-v", run_dir.string() + ":/workspace",
        "-w", "/workspace",
    };
    argv.insert(argv.end(), config.extra_args.begin(), config.extra_args.end());
    argv.push_back(config.image);
    argv.push_back("sh");
    argv.push_back(std::string(kScriptFileName));
    return argv;
}

IsolatedResult ContainerEngine::run(const Snapshot& snapshot,
                                    std::chrono::milliseconds timeout) {
    IsolatedResult out;
    if (!fs::exists(snapshot.root / kScriptFileName)) {
        out.script_missing = true;
        return out;
    }
    TempDir run_dir("artisan-judge-", scratch_root(config_.sandbox));
    copy_tree(snapshot.root, run_dir.path());
    out.run_dir = run_dir.path();

    ProcessOptions opt;
    opt.timeout = timeout;
    opt.grace = config_.sandbox.kill_grace;
    opt.stream_cap = config_.sandbox.observation_cap;
    opt.head_fraction = config_.sandbox.head_fraction;

    out.exec = to_exec_result(run_process(container_run_argv(config_, run_dir.path()), opt));

    fs::path produced = run_dir.path() / kOutputFileName;
    if (fs::exists(produced)) out.output = read_file(produced);
    return out;
}

} // namespace artisan
