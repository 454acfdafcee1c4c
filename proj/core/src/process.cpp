#include "artisan/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "artisan/errors.hpp"
#include "artisan/util.hpp"

namespace artisan {

namespace {

using Clock = std::chrono::steady_clock;

void set_cloexec(int fd) { fcntl(fd, F_SETFD, FD_CLOEXEC); }

[[noreturn]] void child_exec(const std::vector<std::string>& argv, const ProcessOptions& opt,
                             int out_fd, int err_fd) {
    setpgid(0, 0);
    if (!opt.cwd.empty() && chdir(opt.cwd.c_str()) != 0) _exit(126);
    int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    dup2(out_fd, STDOUT_FILENO);
    dup2(err_fd, STDERR_FILENO);

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    if (opt.env) {
        std::vector<char*> cenv;
        cenv.reserve(opt.env->size() + 1);
        for (const auto& e : *opt.env) cenv.push_back(const_cast<char*>(e.c_str()));
        cenv.push_back(nullptr);
        if (argv[0].find('/') != std::string::npos)
            execve(cargv[0], cargv.data(), cenv.data());
        else
            execvpe(cargv[0], cargv.data(), cenv.data());
    } else {
        execvp(cargv[0], cargv.data());
    }
    _exit(127);
}

} // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& opt) {
    if (argv.empty()) throw Error("run_process: empty argv");

    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw Error("pipe() failed: " + std::string(std::strerror(errno)));

    signal(SIGPIPE, SIG_IGN);

    pid_t pid = fork();
    if (pid < 0) throw Error("fork() failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        close(out_pipe[0]);
        close(err_pipe[0]);
        child_exec(argv, opt, out_pipe[1], err_pipe[1]);
    }

    setpgid(pid, pid); // either parent or child wins; both set the same group
    close(out_pipe[1]);
    close(err_pipe[1]);
    set_cloexec(out_pipe[0]);
    set_cloexec(err_pipe[0]);

    StreamCapture out_cap(opt.stream_cap, opt.head_fraction);
    StreamCapture err_cap(opt.stream_cap, opt.head_fraction);

    const auto start = Clock::now();
    const auto deadline = start + opt.timeout;
    bool timed_out = false;
    bool reaped = false;
    int status = 0;
    Clock::time_point reap_time{};

    struct pollfd fds[2];
    bool open_fds[2] = {true, true};
    int read_fd[2] = {out_pipe[0], err_pipe[0]};
    StreamCapture* caps[2] = {&out_cap, &err_cap};

    while (true) {
        if (!reaped) {
            pid_t r = waitpid(pid, &status, WNOHANG);
            if (r == pid) {
                reaped = true;
                reap_time = Clock::now();
            }
        }
        if (!open_fds[0] && !open_fds[1] && reaped) break;

        auto now = Clock::now();
        if (!timed_out && now >= deadline) {
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            timed_out = true;
        }
        // Stop draining if writers linger past the grace window (a background
        // grandchild can keep the pipe open after the command itself exits).
        if (reaped && now >= reap_time + opt.grace) break;
        if (timed_out && now >= deadline + opt.grace) break;

        int nfds = 0;
        for (int i = 0; i < 2; ++i) {
            if (!open_fds[i]) continue;
            fds[nfds].fd = read_fd[i];
            fds[nfds].events = POLLIN;
            fds[nfds].revents = 0;
            ++nfds;
        }
        int wait_ms = 50;
        if (nfds == 0) {
            // Nothing left to read; loop for the waitpid poll only.
            struct timespec ts {0, 10 * 1000 * 1000};
            nanosleep(&ts, nullptr);
            continue;
        }
        int pr = poll(fds, static_cast<nfds_t>(nfds), wait_ms);
        if (pr < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (int fi = 0; fi < nfds; ++fi) {
            if (!(fds[fi].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            int idx = fds[fi].fd == read_fd[0] ? 0 : 1;
            char buf[1 << 14];
            ssize_t n = read(fds[fi].fd, buf, sizeof(buf));
            if (n > 0) {
                caps[idx]->feed(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
                close(read_fd[idx]);
                open_fds[idx] = false;
            }
        }
    }

    for (int i = 0; i < 2; ++i)
        if (open_fds[i]) close(read_fd[i]);
    if (!reaped) {
        kill(-pid, SIGKILL);
        kill(pid, SIGKILL);
        waitpid(pid, &status, 0);
    }

    ProcessResult res;
    res.timed_out = timed_out;
    res.wall = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
    if (WIFEXITED(status))
        res.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        res.exit_code = 128 + WTERMSIG(status);
    res.stdout_text = out_cap.str();
    res.stderr_text = err_cap.str();
    res.truncated = out_cap.truncated() || err_cap.truncated();
    return res;
}

} // namespace artisan
