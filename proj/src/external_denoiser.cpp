#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <vector>

#include "tilefuse/denoiser.hpp"

namespace tilefuse {

namespace {

using Clock = std::chrono::steady_clock;

void set_nonblocking(int fd) {
    const int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

int remaining_ms(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - Clock::now())
                          .count();
    return left < 0 ? 0 : static_cast<int>(left);
}

/// One worker process plus its stdio pipes. Not thread-safe; the pool hands
/// a channel to exactly one caller at a time.
struct Channel {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;

    ~Channel() { shutdown(); }

    void shutdown() {
        if (to_child >= 0) close(to_child);
        if (from_child >= 0) close(from_child);
        to_child = from_child = -1;
        if (pid > 0) {
            // closing stdin asks the worker to exit; escalate if it lingers
            int status = 0;
            for (int i = 0; i < 50; ++i) {
                if (waitpid(pid, &status, WNOHANG) != 0) {
                    pid = -1;
                    return;
                }
                usleep(2000);
            }
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            pid = -1;
        }
    }

    void spawn(const std::vector<std::string>& command) {
        if (command.empty())
            throw ProtocolError("external denoiser: empty command");
        int in_pipe[2];   // parent -> child
        int out_pipe[2];  // child -> parent
        if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
            throw ProtocolError("external denoiser: pipe() failed: " +
                                std::string(strerror(errno)));
        const pid_t child = fork();
        if (child < 0)
            throw ProtocolError("external denoiser: fork() failed: " +
                                std::string(strerror(errno)));
        if (child == 0) {
            dup2(in_pipe[0], STDIN_FILENO);
            dup2(out_pipe[1], STDOUT_FILENO);
            close(in_pipe[0]);
            close(in_pipe[1]);
            close(out_pipe[0]);
            close(out_pipe[1]);
            std::vector<char*> argv;
            for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
            argv.push_back(nullptr);
            execvp(argv[0], argv.data());
            // exec failed; report on stderr and die without running atexit
            fprintf(stderr, "exec %s: %s\n", argv[0], strerror(errno));
            _exit(127);
        }
        close(in_pipe[0]);
        close(out_pipe[1]);
        pid = child;
        to_child = in_pipe[1];
        from_child = out_pipe[0];
        set_nonblocking(to_child);
        set_nonblocking(from_child);
    }

    void write_all(const uint8_t* data, size_t size, Clock::time_point deadline,
                   const char* what) {
        size_t off = 0;
        while (off < size) {
            struct pollfd pfd{to_child, POLLOUT, 0};
            const int pr = poll(&pfd, 1, remaining_ms(deadline));
            if (pr == 0)
                throw ProtocolError(std::string("timeout writing ") + what);
            if (pr < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError(std::string("poll failed writing ") + what +
                                    ": " + strerror(errno));
            }
            if (pfd.revents & (POLLERR | POLLHUP))
                throw ProtocolError(std::string("worker closed pipe while "
                                                "receiving ") + what);
            const ssize_t n = write(to_child, data + off, size - off);
            if (n < 0) {
                if (errno == EAGAIN || errno == EINTR) continue;
                throw ProtocolError(std::string("write failed for ") + what +
                                    ": " + strerror(errno));
            }
            off += static_cast<size_t>(n);
        }
    }

    void read_all(uint8_t* data, size_t size, Clock::time_point deadline,
                  const char* what) {
        size_t off = 0;
        while (off < size) {
            struct pollfd pfd{from_child, POLLIN, 0};
            const int pr = poll(&pfd, 1, remaining_ms(deadline));
            if (pr == 0)
                throw ProtocolError(std::string("timeout reading ") + what);
            if (pr < 0) {
                if (errno == EINTR) continue;
                throw ProtocolError(std::string("poll failed reading ") + what +
                                    ": " + strerror(errno));
            }
            const ssize_t n = read(from_child, data + off, size - off);
            if (n == 0)
                throw ProtocolError(std::string("worker exited while sending ") +
                                    what + " (got " + std::to_string(off) +
                                    " of " + std::to_string(size) + " bytes)");
            if (n < 0) {
                if (errno == EAGAIN || errno == EINTR) continue;
                throw ProtocolError(std::string("read failed for ") + what +
                                    ": " + strerror(errno));
            }
            off += static_cast<size_t>(n);
        }
    }
};

void ignore_sigpipe_once() {
    // a worker dying mid-write must surface as EPIPE, not kill the engine
    static const bool done = [] {
        signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

}  // namespace

template <typename S>
struct ExternalDenoiser<S>::Impl {
    typename ExternalDenoiser<S>::Options opts;
    std::mutex mu;
    std::condition_variable cv;
    std::vector<std::unique_ptr<Channel>> idle;
    int live = 0;

    std::unique_ptr<Channel> acquire() {
        std::unique_lock<std::mutex> lock(mu);
        for (;;) {
            if (!idle.empty()) {
                auto ch = std::move(idle.back());
                idle.pop_back();
                return ch;
            }
            if (live < opts.max_channels) {
                ++live;
                lock.unlock();
                auto ch = std::make_unique<Channel>();
                try {
                    ch->spawn(opts.command);
                } catch (...) {
                    std::lock_guard<std::mutex> relock(mu);
                    --live;
                    cv.notify_one();
                    throw;
                }
                return ch;
            }
            cv.wait(lock);
        }
    }

    void release(std::unique_ptr<Channel> ch, bool healthy) {
        std::lock_guard<std::mutex> lock(mu);
        if (healthy) {
            idle.push_back(std::move(ch));
        } else {
            ch.reset();  // shuts the worker down
            --live;
        }
        cv.notify_one();
    }
};

template <typename S>
ExternalDenoiser<S>::ExternalDenoiser(Options opts)
    : impl_(std::make_unique<Impl>()) {
    if (opts.command.empty())
        throw std::invalid_argument("external denoiser needs a command");
    if (opts.max_channels < 1) opts.max_channels = 1;
    impl_->opts = std::move(opts);
    ignore_sigpipe_once();
}

template <typename S>
ExternalDenoiser<S>::~ExternalDenoiser() = default;

template <typename S>
Grid<S> ExternalDenoiser<S>::denoise(const DenoiseRequest<S>& req) {
    const int h = req.latent->height();
    const int w = req.latent->width();
    const int c = req.latent->channels();
    if (!req.condition->same_shape(*req.latent))
        throw std::invalid_argument("condition/latent shape mismatch");

    // the wire carries f32 regardless of the engine's scalar type
    std::vector<uint8_t> request_bytes;
    if constexpr (std::is_same_v<S, float>) {
        request_bytes = wire::encode_request(h, w, c, req.gamma,
                                             req.condition->data(),
                                             req.latent->data());
    } else {
        const GridF cond = req.condition->template cast<float>();
        const GridF lat = req.latent->template cast<float>();
        request_bytes =
            wire::encode_request(h, w, c, req.gamma, cond.data(), lat.data());
    }

    auto channel = impl_->acquire();
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(
                               impl_->opts.timeout_seconds));
    GridF eps(h, w, c);
    try {
        channel->write_all(request_bytes.data(), request_bytes.size(),
                           deadline, "denoise request");
        uint8_t header[wire::kHeaderBytes];
        channel->read_all(header, wire::kHeaderBytes, deadline,
                          "response header");
        const size_t count = wire::parse_response_header(header, h, w, c);
        channel->read_all(reinterpret_cast<uint8_t*>(eps.data()), count * 4,
                          deadline, "response payload");
    } catch (...) {
        impl_->release(std::move(channel), /*healthy=*/false);
        throw;
    }
    impl_->release(std::move(channel), /*healthy=*/true);

    for (size_t i = 0; i < eps.size(); ++i)
        if (!std::isfinite(eps.data()[i]))
            throw ProtocolError("non-finite value in noise estimate at index " +
                                std::to_string(i));

    if constexpr (std::is_same_v<S, float>) {
        return eps;
    } else {
        return eps.template cast<double>();
    }
}

template class ExternalDenoiser<float>;
template class ExternalDenoiser<double>;

}  // namespace tilefuse
