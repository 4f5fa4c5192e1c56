#include "helpers.hpp"

#include "vfphase/config.hpp"
#include "vfphase/scenarios.hpp"
#include "vfphase/server.hpp"
#include "vfphase/session.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>

using namespace testutil;
namespace ss = vfphase::session;
namespace srv = vfphase::server;
namespace lp = vfphase::loop;
using vfphase::Json;

namespace {

std::shared_ptr<const vp::ConstraintPath> circle_path(double r = 0.1)
{
    return std::make_shared<const vp::ConstraintPath>(fit_circle(r, 1.9 * std::numbers::pi));
}

ss::SessionConfig base_config(lp::Algorithm algo = lp::Algorithm::gn)
{
    ss::SessionConfig c;
    c.path = circle_path();
    c.tracker.algorithm = algo;
    c.tracker.lqt.dt = 0.01;
    c.tracker.lqt.strict = true;
    c.clock = ss::Clock::lockstep;
    return c;
}

Json one(const std::vector<Json>& replies)
{
    REQUIRE(replies.size() == 1);
    return replies.front();
}

Json vec(const Vec3& v)
{
    return Json::array({v.x(), v.y(), v.z()});
}

// Minimal line-oriented client.
class Client {
public:
    explicit Client(int port)
    {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in a{};
        a.sin_family = AF_INET;
        a.sin_port = htons(static_cast<uint16_t>(port));
        ::inet_pton(AF_INET, "127.0.0.1", &a.sin_addr);
        ok_ = ::connect(fd_, reinterpret_cast<sockaddr*>(&a), sizeof a) == 0;
    }
    ~Client() { ::close(fd_); }

    [[nodiscard]] bool ok() const { return ok_; }

    void send(const Json& j) { send_raw(j.dump() + "\n"); }
    void send_raw(const std::string& s) { (void)::send(fd_, s.data(), s.size(), MSG_NOSIGNAL); }

    /// Next message, or null after `timeout_ms`.
    Json recv(int timeout_ms = 2000)
    {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        while (true) {
            if (const auto nl = buf_.find('\n'); nl != std::string::npos) {
                const auto line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return Json::parse(line);
            }
            const auto left =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0)
                return nullptr;
            pollfd p{fd_, POLLIN, 0};
            if (::poll(&p, 1, static_cast<int>(left.count())) <= 0)
                return nullptr;
            char chunk[65536];
            const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0)
                return nullptr;
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    /// Next message of the given type, skipping others.
    Json recv_type(const std::string& type, int timeout_ms = 2000)
    {
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        while (std::chrono::steady_clock::now() < deadline) {
            auto m = recv(timeout_ms);
            if (m.is_null())
                return m;
            if (m.value("type", "") == type)
                return m;
        }
        return nullptr;
    }

private:
    int fd_ = -1;
    bool ok_ = false;
    std::string buf_;
};

}  // namespace

TEST_CASE("session: handshake, health and ping")
{
    ss::Session s(base_config(), "s1");
    const auto hello = one(s.handle({{"type", "hello"}, {"protocol", 1}}));
    CHECK(hello["server"] == "vfphase");
    CHECK(hello["protocol"] == 1);
    CHECK(hello["session"] == "s1");
    CHECK(hello["path"]["format"] == "vfphase.constraint_path");
    CHECK(one(s.handle({{"type", "hello"}, {"protocol", 2}}))["code"] == "protocol-error");

    const auto h = one(s.handle({{"type", "health"}, {"id", 7}}));
    CHECK(h["status"] == "ok");
    CHECK(h["id"] == 7);
    CHECK(one(s.handle({{"type", "ping"}, {"t", 1.5}}))["t"] == 1.5);
}

TEST_CASE("session: malformed messages keep the session")
{
    ss::Session s(base_config(), "s1");
    (void)s.handle({{"type", "step"}, {"ticks", 5}});
    CHECK(one(s.handle_text("{not json"))["code"] == "protocol-error");
    CHECK(one(s.handle(Json::array()))["code"] == "protocol-error");
    CHECK(one(s.handle({{"type", "warp"}, {"id", "a"}}))["id"] == "a");
    CHECK(one(s.handle({{"type", "input"}, {"x", {NAN, 0, 0}}}))["code"] == "rejected-input");
    CHECK(one(s.handle({{"type", "input"}, {"F", {1, 0, 0}}}))["code"] == "rejected-input");
    CHECK(one(s.handle({{"type", "input"}, {"x", {1, 0}}}))["code"] == "protocol-error");
    CHECK(one(s.handle({{"type", "select_algorithm"}, {"algorithm", "newton"}}))["type"] == "error");
    CHECK(one(s.handle({{"type", "set_params"}, {"admittance", {{"k", -1}}}}))["code"] == "invalid-parameter");
    CHECK(s.ticks() == 5);
    CHECK(one(s.handle({{"type", "get_state"}}))["tick"] == 5);
}

TEST_CASE("session: select_algorithm is idempotent")
{
    ss::Session s(base_config(), "s1");
    const auto a = one(s.handle({{"type", "select_algorithm"}, {"algorithm", "lqt"}}));
    const auto b = one(s.handle({{"type", "select_algorithm"}, {"algorithm", "lqt"}}));
    CHECK(a == b);
    CHECK(one(s.handle({{"type", "get_state"}}))["algorithm"] == "lqt");
}

TEST_CASE("session: state fields")
{
    ss::Session s(base_config(), "s1");
    const auto st = one(s.handle({{"type", "get_state"}}));
    for (const char* k : {"t", "x", "F", "s", "s_dot", "s_ddot", "m", "e", "is_eds_near", "osc_center", "osc_radius"})
        CHECK(st.contains(k));
    CHECK(st["osc_radius"].get<double>() == doctest::Approx(0.1).epsilon(0.02));
    (void)s.handle({{"type", "input"}, {"x", {0, 0, 0}}});
    (void)s.handle({{"type", "step"}, {"ticks", 1}});
    CHECK(one(s.handle({{"type", "get_state"}}))["is_eds_near"] == true);
}

TEST_CASE("session: gn jumps across the centre, lqt moves continuously")
{
    const double r = 0.1;
    const double dt = 1e-3;
    const int per_frame = 20;  // ticks between 50 Hz broadcasts
    const auto path = circle_path(r);
    const double s0 = 0.15;
    const auto cp = path->eval(s0);
    const Vec3 centre = cp.osc_center();
    const Vec3 t = cp.m_prime.normalized();

    // alternate between nearby points on opposite sides of the centre, one frame each
    auto run = [&](lp::Algorithm algo) {
        ss::Session s(base_config(algo), "s");
        (void)s.handle({{"type", "reset"}, {"s0", s0}, {"x0", vec(centre)}});
        std::vector<double> frames, ticks;
        for (int f = 0; f < 40; ++f) {
            const double side = f % 2 == 0 ? 1.0 : -1.0;
            Json inputs = Json::array();
            for (int k = 0; k < per_frame; ++k)
                inputs.push_back({{"type", "input"}, {"x", vec(centre + side * 0.1 * r * t)}});
            const auto res = one(s.handle({{"type", "step"}, {"inputs", inputs}}));
            REQUIRE(res["type"] == "step_result");
            for (const auto& st : res["states"])
                ticks.push_back(st["s"].get<double>());
            frames.push_back(ticks.back());
        }
        double frame_jump = 0.0, tick_jump = 0.0;
        for (std::size_t i = 1; i < frames.size(); ++i)
            frame_jump = std::max(frame_jump, std::abs(frames[i] - frames[i - 1]));
        for (std::size_t i = 1; i < ticks.size(); ++i)
            tick_jump = std::max(tick_jump, std::abs(ticks[i] - ticks[i - 1]));
        return std::make_pair(frame_jump, tick_jump);
    };
    const auto [gn_frame, gn_tick] = run(lp::Algorithm::gn);
    const auto [lqt_frame, lqt_tick] = run(lp::Algorithm::lqt);
    (void)gn_tick;
    CHECK(gn_frame >= 0.4 * std::numbers::pi * r);
    // rate bound 10 L / T over the 0.8 s exchange
    const double bound = 10.0 * path->length() / (40 * per_frame * dt);
    CHECK(lqt_tick <= bound * dt);
    CHECK(lqt_frame < 0.4 * std::numbers::pi * r);
}

TEST_CASE("session: scripted replay equals the batch runner")
{
    auto cfg = vfphase::config::load_scenario(std::string(VFPHASE_CONFIG_DIR) + "/target_following.json");
    cfg.duration = 1.0;
    const auto path = vfphase::scenario::load_path_source(cfg.path);
    for (auto algo : {lp::Algorithm::gn, lp::Algorithm::lqt, lp::Algorithm::vm}) {
        const auto batch = vfphase::scenario::run_target_following(cfg, path, algo);
        ss::SessionConfig sc;
        sc.path = path;
        sc.tracker = cfg.tracker_for(algo);
        sc.admittance = cfg.admittance;
        sc.dt = cfg.dt;
        sc.mode = ss::Mode::force;
        sc.clock = ss::Clock::lockstep;
        sc.s0 = cfg.target_following.s_start;
        ss::Session s(sc, "replay");
        Json inputs = Json::array();
        for (const auto& smp : batch.samples)
            inputs.push_back({{"type", "input"}, {"F", vec(smp.F)}});
        const auto res = one(s.handle({{"type", "step"}, {"inputs", inputs}}));
        REQUIRE(res["states"].size() == batch.samples.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < batch.samples.size(); ++i) {
            const auto& st = res["states"][i];
            const auto& b = batch.samples[i];
            worst = std::max(worst, std::abs(st["s"].get<double>() - b.phase.s));
            for (int k = 0; k < 3; ++k)
                worst = std::max(worst, std::abs(st["x"][k].get<double>() - b.x[k]));
        }
        INFO(lp::algorithm_name(algo));
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("session: reset, load_path, set_params and eds_field")
{
    ss::Session s(base_config(lp::Algorithm::lqt), "s1");
    (void)s.handle({{"type", "step"}, {"ticks", 10}});
    const auto st = one(s.handle({{"type", "reset"}, {"s0", 0.2}}));
    CHECK(st["tick"] == 0);
    CHECK(st["s"] == 0.2);

    const auto ack = one(s.handle({{"type", "set_params"}, {"lqt", {{"c2", 0.5}, {"dt", 0.01}}}}));
    CHECK(ack["lqt"]["c2"][0] == 0.5);

    const auto h = one(s.handle({{"type", "load_path"}, {"shape", "line"}}));
    CHECK(h["type"] == "hello");
    const auto line_state = one(s.handle({{"type", "get_state"}}));
    CHECK((line_state["osc_radius"].is_null() || line_state["osc_radius"].get<double>() > 10.0));
    CHECK(line_state["is_eds_near"] == false);
    const auto f = one(s.handle({{"type", "eds_field"}, {"grid", "-0.1,0.6,-0.2,0.2,8,5"}}));
    CHECK(f["distance"].size() == 40);
    int eds = 0;
    for (const auto& v : f["is_eds"])
        eds += v.get<int>();
    CHECK(eds == 0);

    CHECK(one(s.handle({{"type", "set_mode"}, {"mode", "force"}}))["mode"] == "force");
    (void)s.handle({{"type", "input"}, {"F", {1, 0, 0}}});
    (void)s.handle({{"type", "step"}, {"ticks", 100}, {"record", false}});
    CHECK(one(s.handle({{"type", "get_state"}}))["x"][0].get<double>() > 0.0);
}

TEST_CASE("session: divergence resets the session")
{
    auto cfg = base_config(lp::Algorithm::gn);
    cfg.mode = ss::Mode::force;
    ss::Session s(cfg, "s1");
    // explicit integration of a stiff, light plant at 1 ms is unstable
    REQUIRE(one(s.handle({{"type", "set_params"}, {"admittance", {{"m", 1e-6}, {"k", 1e6}, {"b", 1e-6}}}}))["type"] ==
            "ack");
    (void)s.handle({{"type", "input"}, {"F", {1, 0, 0}}});
    std::optional<Json> err;
    for (int k = 0; k < 1000 && !err; ++k)
        err = s.tick();
    REQUIRE(err.has_value());
    CHECK((*err)["code"] == "numerical-divergence");
    CHECK(s.ticks() == 0);
    CHECK_FALSE(s.tick().has_value());
}

TEST_CASE("server: hello, requests, heartbeat, lockstep latency")
{
    srv::ServerOptions so;
    so.port = 0;
    so.heartbeat_s = 0.2;
    srv::Server server(base_config(lp::Algorithm::lqt), so);
    std::string err;
    REQUIRE(server.start(&err));
    Client c(server.port());
    REQUIRE(c.ok());
    const auto hello = c.recv();
    CHECK(hello["type"] == "hello");

    c.send({{"type", "health"}, {"id", 1}});
    CHECK(c.recv_type("health")["id"] == 1);

    c.send_raw("{oops\n");
    CHECK(c.recv_type("error")["code"] == "protocol-error");

    CHECK(c.recv_type("heartbeat", 1000).is_object());

    // lockstep round trip
    std::vector<double> lat;
    for (int i = 0; i < 50; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        c.send({{"type", "step"}, {"ticks", 1}, {"id", i}});
        const auto r = c.recv_type("step_result");
        lat.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        REQUIRE(r["id"] == i);
    }
    std::sort(lat.begin(), lat.end());
    CHECK(lat[lat.size() / 2] < 5.0);

    // a second server cannot take the same port
    srv::ServerOptions dup = so;
    dup.port = server.port();
    srv::Server second(base_config(), dup);
    CHECK_FALSE(second.start(&err));
    CHECK(err.find("cannot bind") != std::string::npos);
    server.stop();
}

TEST_CASE("server: realtime stepping and broadcast rates")
{
    srv::ServerOptions so;
    so.port = 0;
    auto cfg = base_config(lp::Algorithm::lqt);
    cfg.clock = ss::Clock::realtime;
    srv::Server server(cfg, so);
    REQUIRE(server.start());
    Client c(server.port());
    REQUIRE(c.ok());
    (void)c.recv();
    const auto t0 = std::chrono::steady_clock::now();
    int states = 0;
    long first_tick = -1, last_tick = -1;
    while (std::chrono::steady_clock::now() - t0 < std::chrono::seconds(1)) {
        c.send({{"type", "input"}, {"x", {0.05, 0.02, 0.0}}});
        const auto m = c.recv(200);
        if (m.is_object() && m["type"] == "state") {
            ++states;
            if (first_tick < 0)
                first_tick = m["tick"].get<long>();
            last_tick = m["tick"].get<long>();
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(states / secs >= 30.0);
    CHECK((last_tick - first_tick) / secs >= 200.0);
}
