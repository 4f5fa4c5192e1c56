#include "vfphase/server.hpp"

#include "vfphase/error.hpp"

#include <spdlog/spdlog.h>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <optional>

namespace vfphase::server {

using Clock = std::chrono::steady_clock;

class Connection {
public:
    Connection(int fd, session::SessionConfig cfg, std::string id, const ServerOptions& opts)
        : fd_(fd), session_(std::move(cfg), std::move(id)), opts_(opts)
    {
    }

    ~Connection()
    {
        stop();
        join();
        ::close(fd_);
    }

    void start()
    {
        post(session_.hello_message().dump());
        writer_ = std::thread([this] { write_loop(); });
        stepper_ = std::thread([this] { step_loop(); });
        reader_ = std::thread([this] { read_loop(); });
    }

    void stop()
    {
        if (stop_.exchange(true))
            return;
        ::shutdown(fd_, SHUT_RDWR);
        in_cv_.notify_all();
        out_cv_.notify_all();
    }

    void join()
    {
        for (auto* t : {&reader_, &stepper_, &writer_})
            if (t->joinable())
                t->join();
    }

    [[nodiscard]] bool finished() const noexcept { return stop_; }

private:
    static constexpr std::size_t kInboxLimit = 4096;

    void post(std::string line)
    {
        {
            std::lock_guard lk(out_mu_);
            outbox_.push_back(std::move(line));
        }
        out_cv_.notify_one();
    }

    void post_state(std::string line)
    {
        {
            std::lock_guard lk(out_mu_);
            latest_ = std::move(line);
        }
        out_cv_.notify_one();
    }

    void enqueue(Json msg)
    {
        const bool is_input = msg.is_object() && msg.value("type", "") == "input";
        {
            std::lock_guard lk(in_mu_);
            // pose messages: the newest one wins over a queued, not yet applied one
            if (is_input && !inbox_.empty() && inbox_.back().is_object() && inbox_.back().value("type", "") == "input") {
                inbox_.back() = std::move(msg);
            } else if (inbox_.size() >= kInboxLimit) {
                post(session::error_message("rejected-input", "request queue full").dump());
                return;
            } else {
                inbox_.push_back(std::move(msg));
            }
        }
        in_cv_.notify_one();
    }

    void read_loop()
    {
        std::string buf;
        char chunk[8192];
        while (!stop_) {
            pollfd p{fd_, POLLIN, 0};
            const int r = ::poll(&p, 1, 100);
            if (r < 0 && errno != EINTR)
                break;
            if (r <= 0)
                continue;
            const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0)
                break;
            buf.append(chunk, static_cast<std::size_t>(n));
            std::size_t start = 0, nl;
            while ((nl = buf.find('\n', start)) != std::string::npos) {
                std::string line = buf.substr(start, nl - start);
                start = nl + 1;
                if (!line.empty() && line.back() == '\r')
                    line.pop_back();
                if (line.find_first_not_of(" \t") == std::string::npos)
                    continue;
                try {
                    enqueue(Json::parse(line));
                } catch (const Json::parse_error& e) {
                    post(session::error_message("protocol-error", std::string("malformed JSON: ") + e.what()).dump());
                }
            }
            buf.erase(0, start);
            if (buf.size() > opts_.max_line) {
                post(session::error_message("protocol-error", "frame exceeds the maximum line length").dump());
                buf.clear();
            }
        }
        stop();
    }

    void step_loop()
    {
        const auto period = std::chrono::duration_cast<Clock::duration>(
            std::chrono::duration<double>(session_.loop().dt()));
        const auto broadcast_every = std::chrono::duration_cast<Clock::duration>(
            std::chrono::duration<double>(1.0 / std::max(opts_.broadcast_hz, 1e-3)));
        const auto heartbeat_every =
            std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(opts_.heartbeat_s));
        auto next = Clock::now();
        auto last_broadcast = next;
        auto last_heartbeat = next;
        long broadcast_tick = -1;

        while (!stop_) {
            std::deque<Json> batch;
            {
                std::unique_lock lk(in_mu_);
                if (session_.clock() == session::Clock::lockstep && inbox_.empty())
                    in_cv_.wait_for(lk, std::chrono::milliseconds(50), [this] { return stop_ || !inbox_.empty(); });
                batch.swap(inbox_);
            }
            for (auto& msg : batch)
                for (auto& reply : session_.handle(msg))
                    post(reply.dump());

            const auto now = Clock::now();
            if (session_.clock() == session::Clock::realtime) {
                if (auto err = session_.tick())
                    post(err->dump());
                if (now - last_broadcast >= broadcast_every) {
                    last_broadcast = now;
                    if (session_.ticks() != broadcast_tick) {
                        broadcast_tick = session_.ticks();
                        post_state(session_.state_message().dump());
                    }
                }
                next += period;
                if (Clock::now() - next > std::chrono::milliseconds(100))
                    next = Clock::now();  // fell behind; do not try to catch up in a burst
                std::unique_lock lk(in_mu_);
                in_cv_.wait_until(lk, next, [this] { return stop_.load(); });
            } else {
                next = now;
            }
            if (now - last_heartbeat >= heartbeat_every) {
                last_heartbeat = now;
                post(Json{{"type", "heartbeat"}, {"t", session_.loop().time()}, {"tick", session_.ticks()}}.dump());
            }
        }
    }

    void write_loop()
    {
        while (true) {
            std::deque<std::string> lines;
            {
                std::unique_lock lk(out_mu_);
                out_cv_.wait(lk, [this] { return stop_ || !outbox_.empty() || latest_; });
                if (stop_ && outbox_.empty() && !latest_)
                    return;
                lines.swap(outbox_);
                if (latest_) {
                    lines.push_back(std::move(*latest_));
                    latest_.reset();
                }
            }
            for (auto& l : lines) {
                l.push_back('\n');
                if (!send_all(l)) {
                    stop();
                    return;
                }
            }
            if (stop_)
                return;
        }
    }

    bool send_all(const std::string& s)
    {
        std::size_t off = 0;
        while (off < s.size()) {
            const ssize_t n = ::send(fd_, s.data() + off, s.size() - off, MSG_NOSIGNAL);
            if (n < 0 && errno == EINTR)
                continue;
            if (n <= 0)
                return false;
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    int fd_;
    session::Session session_;
    ServerOptions opts_;
    std::atomic<bool> stop_{false};

    std::mutex in_mu_;
    std::condition_variable in_cv_;
    std::deque<Json> inbox_;

    std::mutex out_mu_;
    std::condition_variable out_cv_;
    std::deque<std::string> outbox_;
    std::optional<std::string> latest_;

    std::thread reader_, stepper_, writer_;
};

// ---------------------------------------------------------------------------

Server::Server(session::SessionConfig base, ServerOptions opts) : base_(std::move(base)), opts_(std::move(opts))
{
    if (!base_.path)
        throw Error(ErrorCode::invalid_parameter, "server needs a path");
}

Server::~Server()
{
    stop();
}

bool Server::start(std::string* error)
{
    auto fail = [&](const std::string& msg) {
        if (error)
            *error = msg;
        if (listen_fd_ >= 0)
            ::close(listen_fd_);
        listen_fd_ = -1;
        return false;
    };
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(opts_.port);
    if (const int rc = ::getaddrinfo(opts_.bind.c_str(), port.c_str(), &hints, &res); rc != 0)
        return fail("cannot resolve " + opts_.bind + ": " + gai_strerror(rc));
    std::string last = "no usable address";
    for (auto* ai = res; ai; ai = ai->ai_next) {
        listen_fd_ = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (listen_fd_ < 0)
            continue;
        const int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(listen_fd_, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(listen_fd_, 16) == 0)
            break;
        last = std::strerror(errno);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (listen_fd_ < 0)
        return fail("cannot bind " + opts_.bind + ":" + port + ": " + last);

    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                       : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    spdlog::info("listening on {}:{}", opts_.bind, port_);
    return true;
}

void Server::stop()
{
    if (!running_.exchange(false))
        return;
    if (acceptor_.joinable())
        acceptor_.join();
    if (listen_fd_ >= 0)
        ::close(listen_fd_);
    listen_fd_ = -1;
    std::vector<std::shared_ptr<Connection>> conns;
    {
        std::lock_guard lk(mu_);
        conns.swap(connections_);
    }
    for (auto& c : conns)
        c->stop();
    conns.clear();  // joins and closes
}

void Server::reap()
{
    std::lock_guard lk(mu_);
    std::erase_if(connections_, [](const auto& c) { return c->finished(); });
}

void Server::accept_loop()
{
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        const int r = ::poll(&p, 1, 100);
        reap();
        if (r <= 0)
            continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0)
            continue;
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        try {
            auto cfg = base_;
            auto conn = std::make_shared<Connection>(fd, cfg, "s" + std::to_string(next_id_++), opts_);
            conn->start();
            std::lock_guard lk(mu_);
            connections_.push_back(std::move(conn));
            spdlog::info("session opened");
        } catch (const std::exception& e) {
            spdlog::warn("session setup failed: {}", e.what());
            ::close(fd);
        }
    }
}

}  // namespace vfphase::server
