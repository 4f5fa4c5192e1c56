#include "vfphase/session.hpp"

#include "vfphase/builtin_paths.hpp"
#include "vfphase/config.hpp"
#include "vfphase/eds_field.hpp"
#include "vfphase/error.hpp"
#include "vfphase/path_io.hpp"

#include <cmath>

namespace vfphase::session {
namespace {

Json vec_json(const Vec3& v)
{
    return Json::array({v.x(), v.y(), v.z()});
}

Vec3 vec_field(const Json& msg, const char* key)
{
    const auto& v = msg.at(key);
    if (!v.is_array() || v.size() != 3)
        throw Error(ErrorCode::protocol_error, std::string("'") + key + "' must be an array of 3 numbers");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        if (!v[static_cast<std::size_t>(i)].is_number())
            throw Error(ErrorCode::protocol_error, std::string("'") + key + "' must be an array of 3 numbers");
        out[i] = v[static_cast<std::size_t>(i)].get<double>();
    }
    // nlohmann maps NaN/inf literals to null, so non-finite values only arrive via overflow
    if (!out.allFinite())
        throw Error(ErrorCode::rejected_input, std::string("'") + key + "' is not finite");
    return out;
}

std::string string_field(const Json& msg, const char* key)
{
    if (!msg.contains(key) || !msg.at(key).is_string())
        throw Error(ErrorCode::protocol_error, std::string("missing string field '") + key + "'");
    return msg.at(key).get<std::string>();
}

}  // namespace

Mode parse_mode(const std::string& s)
{
    if (s == "drag")
        return Mode::drag;
    if (s == "force")
        return Mode::force;
    throw Error(ErrorCode::protocol_error, "unknown mode '" + s + "' (expected drag or force)");
}

std::string mode_name(Mode m)
{
    return m == Mode::drag ? "drag" : "force";
}

Json error_message(std::string_view code, const std::string& message, const Json& id)
{
    Json j{{"type", "error"}, {"code", std::string(code)}, {"message", message}};
    if (!id.is_null())
        j["id"] = id;
    return j;
}

Session::Session(SessionConfig cfg, std::string id)
    : cfg_(std::move(cfg)), id_(std::move(id)),
      loop_(cfg_.path, {cfg_.tracker, cfg_.admittance, cfg_.dt}, cfg_.path ? cfg_.path->position(cfg_.s0) : Vec3::Zero(),
            cfg_.s0),
      mode_(cfg_.mode), clock_(cfg_.clock), input_x_(loop_.plant_state().pos)
{
}

Json Session::hello_message() const
{
    return {{"type", "hello"},
            {"server", kServerName},
            {"protocol", kProtocolVersion},
            {"session", id_},
            {"dt", cfg_.dt},
            {"algorithms", {"gn", "lqt", "vm", "gc"}},
            {"algorithm", loop::algorithm_name(loop_.config().tracker.algorithm)},
            {"mode", mode_name(mode_)},
            {"clock", clock_ == Clock::realtime ? "realtime" : "lockstep"},
            {"path", io::path_to_json(loop_.path())}};
}

Json Session::state_message() const
{
    const auto& ps = loop_.plant_state();
    const auto& ph = loop_.tracker().state();
    const auto& path = loop_.path();
    const auto cp = path.eval(ph.s);
    const auto eds = path::eds_analyze(path, ps.pos);
    const Vec3 e = ps.pos - cp.m;
    bool near = eds.is_eds;
    if (!near && cp.normal_defined && std::isfinite(cp.osc_radius))
        near = (ps.pos - cp.osc_center()).norm() < 0.2 * cp.osc_radius;
    const auto& d = loop_.tracker().diagnostics();
    return {{"type", "state"},
            {"tick", ticks_},
            {"t", loop_.time()},
            {"algorithm", loop::algorithm_name(loop_.config().tracker.algorithm)},
            {"mode", mode_name(mode_)},
            {"x", vec_json(ps.pos)},
            {"v", vec_json(ps.vel)},
            {"F", vec_json(mode_ == Mode::force ? input_F_ : Vec3::Zero())},
            {"s", ph.s},
            {"s_dot", ph.s_dot},
            {"s_ddot", ph.s_ddot},
            {"m", vec_json(cp.m)},
            {"e", vec_json(e)},
            {"e_norm", e.norm()},
            {"is_eds_near", near},
            {"osc_center", cp.normal_defined ? vec_json(cp.osc_center()) : Json(nullptr)},
            {"osc_radius", std::isfinite(cp.osc_radius) ? Json(cp.osc_radius) : Json(nullptr)},
            {"diag",
             {{"inner_iterations", d.inner_iterations},
              {"converged", d.converged},
              {"stalled", d.stalled},
              {"cost", d.cost}}}};
}

void Session::apply_input(const Json& msg)
{
    const bool has_x = msg.contains("x");
    const bool has_F = msg.contains("F");
    if (has_x == has_F)
        throw Error(ErrorCode::protocol_error, "input needs exactly one of 'x' or 'F'");
    if (has_x) {
        if (mode_ != Mode::drag)
            throw Error(ErrorCode::rejected_input, "position input requires drag mode");
        input_x_ = vec_field(msg, "x");
    } else {
        if (mode_ != Mode::force)
            throw Error(ErrorCode::rejected_input, "force input requires force mode");
        input_F_ = vec_field(msg, "F");
        input_disturbance_ = msg.contains("disturbance") ? vec_field(msg, "disturbance") : Vec3::Zero();
    }
}

void Session::reset_loop(const Json* msg)
{
    double s0 = cfg_.s0;
    if (msg && msg->contains("s0")) {
        if (!msg->at("s0").is_number())
            throw Error(ErrorCode::protocol_error, "'s0' must be a number");
        s0 = msg->at("s0").get<double>();
    }
    Vec3 x0 = loop_.path().position(loop_.path().clamp(s0));
    if (msg && msg->contains("x0"))
        x0 = vec_field(*msg, "x0");
    loop_.reset(x0, s0);
    input_x_ = x0;
    input_F_.setZero();
    input_disturbance_.setZero();
    ticks_ = 0;
}

void Session::step_once()
{
    if (mode_ == Mode::drag)
        loop_.step_drag(input_x_);
    else
        loop_.step_force(input_F_, input_disturbance_);
    ++ticks_;
}

std::optional<Json> Session::tick()
{
    try {
        step_once();
        return std::nullopt;
    } catch (const Error& e) {
        reset_loop(nullptr);
        return error_message(to_string(e.code()), std::string(e.what()) + "; session reset");
    }
}

std::vector<Json> Session::handle_text(const std::string& line)
{
    Json msg;
    try {
        msg = Json::parse(line);
    } catch (const Json::parse_error& e) {
        return {error_message(to_string(ErrorCode::protocol_error), std::string("malformed JSON: ") + e.what())};
    }
    return handle(msg);
}

std::vector<Json> Session::handle(const Json& msg)
{
    const Json id = msg.is_object() && msg.contains("id") ? msg.at("id") : Json(nullptr);
    try {
        if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string())
            throw Error(ErrorCode::protocol_error, "message must be an object with a string 'type'");
        auto replies = dispatch(msg);
        if (!id.is_null())
            for (auto& r : replies)
                r["id"] = id;
        return replies;
    } catch (const Error& e) {
        return {error_message(to_string(e.code()), e.what(), id)};
    } catch (const Json::exception& e) {
        return {error_message(to_string(ErrorCode::protocol_error), e.what(), id)};
    }
}

std::vector<Json> Session::dispatch(const Json& msg)
{
    const std::string type = msg.at("type").get<std::string>();
    if (type == "hello") {
        if (msg.contains("protocol")) {
            if (!msg.at("protocol").is_number_integer() || msg.at("protocol").get<int>() != kProtocolVersion)
                throw Error(ErrorCode::protocol_error,
                            "unsupported protocol version (server speaks " + std::to_string(kProtocolVersion) + ")");
        }
        return {hello_message()};
    }
    if (type == "health")
        return {{{"type", "health"},
                 {"status", "ok"},
                 {"server", kServerName},
                 {"protocol", kProtocolVersion},
                 {"session", id_},
                 {"tick", ticks_}}};
    if (type == "ping") {
        Json r{{"type", "pong"}};
        if (msg.contains("t"))
            r["t"] = msg.at("t");
        return {r};
    }
    if (type == "get_state")
        return {state_message()};
    if (type == "input") {
        apply_input(msg);
        return {};
    }
    if (type == "select_algorithm") {
        loop_.set_algorithm(loop::parse_algorithm(string_field(msg, "algorithm")));
        return {{{"type", "ack"}, {"request", type}, {"algorithm", loop::algorithm_name(loop_.config().tracker.algorithm)}}};
    }
    if (type == "set_mode") {
        if (msg.contains("mode")) {
            const Mode m = parse_mode(string_field(msg, "mode"));
            if (m != mode_) {
                mode_ = m;
                input_x_ = loop_.plant_state().pos;
                input_F_.setZero();
                input_disturbance_.setZero();
            }
        }
        if (msg.contains("clock")) {
            const auto c = string_field(msg, "clock");
            if (c == "realtime")
                clock_ = Clock::realtime;
            else if (c == "lockstep")
                clock_ = Clock::lockstep;
            else
                throw Error(ErrorCode::protocol_error, "unknown clock '" + c + "' (expected realtime or lockstep)");
        }
        return {{{"type", "ack"},
                 {"request", type},
                 {"mode", mode_name(mode_)},
                 {"clock", clock_ == Clock::realtime ? "realtime" : "lockstep"}}};
    }
    if (type == "set_params") {
        auto tp = loop_.config().tracker;
        auto adm = loop_.config().admittance;
        try {
            if (msg.contains("lqt"))
                config::apply_lqt(msg.at("lqt"), tp.lqt);
            if (msg.contains("vm"))
                config::apply_vm(msg.at("vm"), tp.vm);
            if (msg.contains("admittance"))
                config::apply_admittance(msg.at("admittance"), adm);
        } catch (const Error& e) {
            throw Error(ErrorCode::invalid_parameter, e.what());
        }
        if (msg.contains("velocity_alpha")) {
            if (!msg.at("velocity_alpha").is_number())
                throw Error(ErrorCode::invalid_parameter, "'velocity_alpha' must be a number");
            tp.velocity_alpha = msg.at("velocity_alpha").get<double>();
        }
        if (msg.contains("gn_max_inner")) {
            if (!msg.at("gn_max_inner").is_number_integer())
                throw Error(ErrorCode::invalid_parameter, "'gn_max_inner' must be an integer");
            tp.gn_max_inner = msg.at("gn_max_inner").get<int>();
        }
        adm.validate();
        loop_.set_tracker_params(tp);
        loop_.set_admittance(adm);
        return {{{"type", "ack"}, {"request", type}, {"lqt", config::lqt_to_json(tp.lqt)}}};
    }
    if (type == "reset") {
        reset_loop(&msg);
        return {state_message()};
    }
    if (type == "load_path") {
        std::shared_ptr<const path::ConstraintPath> p;
        if (msg.contains("path")) {
            p = std::make_shared<const path::ConstraintPath>(io::path_from_json(msg.at("path")));
        } else if (msg.contains("shape")) {
            shapes::ShapeSpec spec;
            spec.kind = shapes::parse_kind(string_field(msg, "shape"));
            for (const char* k : {"radius", "sweep_deg", "start_deg", "semi_a", "semi_b", "half_width"}) {
                if (!msg.contains(k))
                    continue;
                if (!msg.at(k).is_number())
                    throw Error(ErrorCode::protocol_error, std::string("'") + k + "' must be a number");
                const double v = msg.at(k).get<double>();
                if (std::string(k) == "radius") spec.radius = v;
                else if (std::string(k) == "sweep_deg") spec.sweep_deg = v;
                else if (std::string(k) == "start_deg") spec.start_deg = v;
                else if (std::string(k) == "semi_a") spec.semi_a = v;
                else if (std::string(k) == "semi_b") spec.semi_b = v;
                else spec.half_width = v;
            }
            p = std::make_shared<const path::ConstraintPath>(shapes::make_path(spec).path);
        } else {
            throw Error(ErrorCode::protocol_error, "load_path needs 'path' or 'shape'");
        }
        cfg_.path = p;
        loop_.set_path(p, p->position(0.0), 0.0);
        cfg_.s0 = 0.0;
        reset_loop(nullptr);
        return {hello_message()};
    }
    if (type == "step") {
        std::vector<Json> inputs;
        long n = 1;
        if (msg.contains("inputs")) {
            if (!msg.at("inputs").is_array())
                throw Error(ErrorCode::protocol_error, "'inputs' must be an array");
            for (const auto& in : msg.at("inputs"))
                inputs.push_back(in);
            n = static_cast<long>(inputs.size());
        } else if (msg.contains("ticks")) {
            if (!msg.at("ticks").is_number_integer() || msg.at("ticks").get<long>() < 1)
                throw Error(ErrorCode::protocol_error, "'ticks' must be a positive integer");
            n = msg.at("ticks").get<long>();
        }
        const bool record = !msg.contains("record") || msg.at("record").get<bool>();
        Json states = Json::array();
        for (long k = 0; k < n; ++k) {
            if (!inputs.empty())
                apply_input(inputs[static_cast<std::size_t>(k)]);
            try {
                step_once();
            } catch (const Error& e) {
                reset_loop(nullptr);
                return {error_message(to_string(e.code()), std::string(e.what()) + "; session reset")};
            }
            if (record || k + 1 == n)
                states.push_back(state_message());
        }
        return {{{"type", "step_result"}, {"ticks", n}, {"states", std::move(states)}}};
    }
    if (type == "eds_field") {
        auto grid = field::default_grid(loop_.path(), 60, 60);
        if (msg.contains("grid"))
            grid = field::parse_grid(string_field(msg, "grid"));
        const auto cells = field::eds_field(loop_.path(), grid);
        Json dist = Json::array(), eds = Json::array();
        for (const auto& c : cells) {
            dist.push_back(c.distance);
            eds.push_back(c.is_eds ? 1 : 0);
        }
        return {{{"type", "eds_field"},
                 {"grid", {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"y_min", grid.y_min},
                           {"y_max", grid.y_max}, {"nx", grid.nx}, {"ny", grid.ny}, {"z", grid.z}}},
                 {"distance", std::move(dist)},
                 {"is_eds", std::move(eds)}}};
    }
    throw Error(ErrorCode::protocol_error, "unknown message type '" + type + "'");
}

}  // namespace vfphase::session
