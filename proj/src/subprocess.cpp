#include "scene/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include "scene/error.hpp"

namespace scene {

namespace {

void read_available(int fd, std::string& sink, bool& open) {
    char buf[4096];
    while (true) {
        const ssize_t n = ::read(fd, buf, sizeof(buf));
        if (n > 0) {
            sink.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0) {
            open = false;
            return;
        } else {
            if (errno == EAGAIN || errno == EWOULDBLOCK) {
                return;
            }
            open = false;
            return;
        }
    }
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, double timeout_sec) {
    if (argv.empty()) {
        throw ValueError("run_process: empty argv");
    }
    int out_pipe[2];
    int err_pipe[2];
    if (pipe2(out_pipe, O_CLOEXEC) != 0 || pipe2(err_pipe, O_CLOEXEC) != 0) {
        throw IoError("run_process: pipe failed");
    }

    const pid_t pid = fork();
    if (pid < 0) {
        throw IoError("run_process: fork failed");
    }
    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        const int devnull = open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            dup2(devnull, STDIN_FILENO);
        }
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv) {
            args.push_back(const_cast<char*>(a.c_str()));
        }
        args.push_back(nullptr);
        execvp(args[0], args.data());
        std::fprintf(stderr, "exec failed: %s: %s\n", args[0], std::strerror(errno));
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    ProcessResult result;
    bool out_open = true;
    bool err_open = true;
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(static_cast<long>(timeout_sec * 1000.0));

    while (out_open || err_open) {
        if (timeout_sec > 0.0 && std::chrono::steady_clock::now() > deadline) {
            kill(pid, SIGKILL);
            result.timed_out = true;
            break;
        }
        pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
        const int rc = poll(fds, 2, 200);
        if (rc < 0 && errno != EINTR) {
            break;
        }
        if (fds[0].revents & (POLLIN | POLLHUP)) {
            read_available(out_pipe[0], result.std_out, out_open);
        }
        if (fds[1].revents & (POLLIN | POLLHUP)) {
            read_available(err_pipe[0], result.std_err, err_open);
        }
    }
    close(out_pipe[0]);
    close(err_pipe[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    if (result.timed_out) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

std::string render_argv(const std::vector<std::string>& argv) {
    std::string out;
    for (std::size_t i = 0; i < argv.size(); ++i) {
        if (i) {
            out += ' ';
        }
        const bool quote = argv[i].find(' ') != std::string::npos || argv[i].empty();
        if (quote) {
            out += '\'';
        }
        out += argv[i];
        if (quote) {
            out += '\'';
        }
    }
    return out;
}

bool executable_on_path(const std::string& name) {
    if (name.find('/') != std::string::npos) {
        return ::access(name.c_str(), X_OK) == 0;
    }
    const char* path = std::getenv("PATH");
    if (!path) {
        return false;
    }
    std::string p(path);
    std::size_t start = 0;
    while (start <= p.size()) {
        const std::size_t end = p.find(':', start);
        const std::string dir = p.substr(start, end == std::string::npos ? end : end - start);
        if (!dir.empty()) {
            const std::string candidate = dir + "/" + name;
            if (::access(candidate.c_str(), X_OK) == 0) {
                return true;
            }
        }
        if (end == std::string::npos) {
            break;
        }
        start = end + 1;
    }
    return false;
}

}  // namespace scene
