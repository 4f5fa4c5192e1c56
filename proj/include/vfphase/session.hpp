#pragma once
/**
 * @file  session.hpp
 * @brief Message-driven interactive session around one ClosedLoop.
 *
 * The session is transport agnostic: handle() consumes one decoded message
 * and returns the replies. A Session is not thread safe; the server gives
 * each one a single stepping thread.
 */

#include "vfphase/closed_loop.hpp"
#include "vfphase/json_fwd.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vfphase::session {

inline constexpr int kProtocolVersion = 1;
inline constexpr const char* kServerName = "vfphase";

enum class Mode { drag, force };
enum class Clock { realtime, lockstep };

Mode parse_mode(const std::string& s);
std::string mode_name(Mode m);

struct SessionConfig {
    std::shared_ptr<const path::ConstraintPath> path;
    loop::TrackerParams tracker;
    plant::AdmittanceParams admittance;
    double dt = 1e-3;
    Mode mode = Mode::drag;
    Clock clock = Clock::realtime;
    double s0 = 0.0;
};

class Session {
public:
    Session(SessionConfig cfg, std::string id);

    /// Replies to one request. Protocol errors become "error" replies; the session state is kept.
    std::vector<Json> handle(const Json& msg);
    /// Same, starting from raw text.
    std::vector<Json> handle_text(const std::string& line);

    /// One control period with the most recent input. On divergence the
    /// session resets itself and returns the error message to broadcast.
    std::optional<Json> tick();

    [[nodiscard]] Json state_message() const;
    [[nodiscard]] Json hello_message() const;
    [[nodiscard]] Clock clock() const noexcept { return clock_; }
    [[nodiscard]] Mode mode() const noexcept { return mode_; }
    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] const loop::ClosedLoop& loop() const noexcept { return loop_; }
    [[nodiscard]] long ticks() const noexcept { return ticks_; }

private:
    std::vector<Json> dispatch(const Json& msg);
    void apply_input(const Json& msg);
    void reset_loop(const Json* msg);
    void step_once();

    SessionConfig cfg_;
    std::string id_;
    loop::ClosedLoop loop_;
    Mode mode_;
    Clock clock_;
    Vec3 input_x_;
    Vec3 input_F_ = Vec3::Zero();
    Vec3 input_disturbance_ = Vec3::Zero();
    long ticks_ = 0;
};

/// Error reply in the wire format.
Json error_message(std::string_view code, const std::string& message, const Json& id = nullptr);

}  // namespace vfphase::session
