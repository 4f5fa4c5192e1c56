#pragma once
/**
 * @file  server.hpp
 * @brief TCP front end for interactive sessions.
 *
 * Framing: one JSON object per line (UTF-8, '\n' terminated). Every
 * connection owns one Session driven by its own stepping thread; the socket
 * reader and writer talk to it through queues only.
 */

#include "vfphase/session.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace vfphase::server {

struct ServerOptions {
    std::string bind = "127.0.0.1";
    int port = 8765;                 ///< 0 picks a free port
    double broadcast_hz = 50.0;      ///< state broadcast rate in realtime clock
    double heartbeat_s = 1.0;
    std::size_t max_line = 1 << 20;  ///< longer frames are rejected
};

class Connection;

class Server {
public:
    Server(session::SessionConfig base, ServerOptions opts);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Bind and start accepting. Returns false (with a reason) when the address is unavailable.
    bool start(std::string* error = nullptr);
    void stop();
    [[nodiscard]] int port() const noexcept { return port_; }
    [[nodiscard]] bool running() const noexcept { return running_; }

private:
    void accept_loop();
    void reap();

    session::SessionConfig base_;
    ServerOptions opts_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::vector<std::shared_ptr<Connection>> connections_;
    long next_id_ = 1;
};

}  // namespace vfphase::server
