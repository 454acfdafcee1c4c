#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace artisan {

struct ProcessOptions {
    std::filesystem::path cwd;
    /// When set, the child sees exactly these "KEY=VALUE" entries.
    std::optional<std::vector<std::string>> env;
    std::chrono::milliseconds timeout{120'000};
    /// Extra time allowed for pipe draining after the deadline kill.
    std::chrono::milliseconds grace{2'000};
    std::size_t stream_cap = 20'000;
    double head_fraction = 0.6;
};

struct ProcessResult {
    int exit_code = -1; // 128+signal when terminated by a signal
    bool timed_out = false;
    bool truncated = false;
    std::string stdout_text;
    std::string stderr_text;
    std::chrono::milliseconds wall{0};
};

/// Run a command with its own process group; on timeout the whole group is
/// SIGKILLed and whatever output was captured so far is returned.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opt);

} // namespace artisan
