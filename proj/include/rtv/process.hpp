#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "rtv/errors.hpp"

namespace rtv {

struct ProcessError : Error {
    using Error::Error;
};

// One child process with piped stdin/stdout. Reads are deadline-bounded;
// the destructor reaps (killing first if still alive).
class ChildProcess {
  public:
    using Clock = std::chrono::steady_clock;

    explicit ChildProcess(const std::vector<std::string>& argv) {
        if (argv.empty()) throw ProcessError("empty command line");
        int in_pipe[2], out_pipe[2], status_pipe[2];
        if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(status_pipe) != 0) {
            throw ProcessError("pipe() failed: " + std::string(strerror(errno)));
        }
        fcntl(status_pipe[1], F_SETFD, FD_CLOEXEC);
        pid_ = fork();
        if (pid_ < 0) {
            throw ProcessError("fork() failed: " + std::string(strerror(errno)));
        }
        if (pid_ == 0) {
            dup2(in_pipe[0], STDIN_FILENO);
            dup2(out_pipe[1], STDOUT_FILENO);
            close(in_pipe[0]);
            close(in_pipe[1]);
            close(out_pipe[0]);
            close(out_pipe[1]);
            close(status_pipe[0]);
            std::vector<char*> args;
            for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
            args.push_back(nullptr);
            execvp(args[0], args.data());
            int err = errno;
            ssize_t ignored = write(status_pipe[1], &err, sizeof(err));
            (void)ignored;
            _exit(127);
        }
        close(in_pipe[0]);
        close(out_pipe[1]);
        close(status_pipe[1]);
        in_fd_ = in_pipe[1];
        out_fd_ = out_pipe[0];
        // exec failure is reported through the close-on-exec pipe.
        int err = 0;
        ssize_t n = read(status_pipe[0], &err, sizeof(err));
        close(status_pipe[0]);
        if (n > 0) {
            int status = 0;
            waitpid(pid_, &status, 0);
            pid_ = -1;
            close(in_fd_);
            close(out_fd_);
            in_fd_ = out_fd_ = -1;
            throw ProcessError("cannot start '" + argv[0] + "': " + strerror(err));
        }
        fcntl(out_fd_, F_SETFL, O_NONBLOCK);
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() {
        close_stdin();
        if (out_fd_ >= 0) close(out_fd_);
        if (pid_ > 0) {
            int status = 0;
            if (waitpid(pid_, &status, WNOHANG) == 0) {
                kill(pid_, SIGKILL);
                waitpid(pid_, &status, 0);
            }
        }
    }

    void write_stdin(std::string_view data) {
        size_t off = 0;
        while (off < data.size()) {
            ssize_t n = ::write(in_fd_, data.data() + off, data.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw ProcessError("write to child failed: " + std::string(strerror(errno)));
            }
            off += static_cast<size_t>(n);
        }
    }

    void close_stdin() {
        if (in_fd_ >= 0) {
            close(in_fd_);
            in_fd_ = -1;
        }
    }

    // Next full line (without '\n'), or nullopt on EOF/deadline.
    std::optional<std::string> read_line(Clock::time_point deadline) {
        for (;;) {
            size_t nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (eof_) {
                if (buffer_.empty()) return std::nullopt;
                std::string line;
                line.swap(buffer_);
                return line;
            }
            if (!fill(deadline)) return std::nullopt;
        }
    }

    // Everything until EOF or deadline.
    std::string read_all(Clock::time_point deadline) {
        while (!eof_) {
            if (!fill(deadline)) break;
        }
        std::string out;
        out.swap(buffer_);
        return out;
    }

    bool timed_out() const { return timed_out_; }

    int wait(Clock::time_point deadline) {
        if (pid_ <= 0) return -1;
        for (;;) {
            int status = 0;
            pid_t r = waitpid(pid_, &status, WNOHANG);
            if (r == pid_) {
                pid_ = -1;
                return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
            }
            if (Clock::now() >= deadline) {
                terminate();
                return -1;
            }
            usleep(2000);
        }
    }

    void terminate() {
        if (pid_ > 0) {
            kill(pid_, SIGKILL);
            int status = 0;
            waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

  private:
    // Pulls more output into the buffer; false on EOF or deadline.
    bool fill(Clock::time_point deadline) {
        for (;;) {
            char chunk[4096];
            ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
            if (n > 0) {
                buffer_.append(chunk, static_cast<size_t>(n));
                return true;
            }
            if (n == 0) {
                eof_ = true;
                return false;
            }
            if (errno == EINTR) continue;
            if (errno != EAGAIN && errno != EWOULDBLOCK) {
                eof_ = true;
                return false;
            }
            auto now = Clock::now();
            if (now >= deadline) {
                timed_out_ = true;
                return false;
            }
            auto remaining =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
            struct pollfd pfd {
                out_fd_, POLLIN, 0
            };
            int timeout_ms = static_cast<int>(remaining.count()) + 1;
            int pr = poll(&pfd, 1, timeout_ms);
            if (pr == 0) {
                timed_out_ = true;
                return false;
            }
        }
    }

    pid_t pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    std::string buffer_;
    bool eof_ = false;
    bool timed_out_ = false;
};

}  // namespace rtv
