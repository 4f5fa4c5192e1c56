#include "vfphase/scenarios.hpp"

#include "vfphase/error.hpp"
#include "vfphase/path_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace vfphase::scenario {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double min_jerk(double tau)
{
    tau = std::clamp(tau, 0.0, 1.0);
    return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

std::string fmt(double v)
{
    return io::format_double(v);
}

std::size_t tick_count(const ScenarioConfig& cfg)
{
    return static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt));
}

/// Shared driver for the spring-to-target (or scripted) human experiments.
SimTrace run_closed_loop(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path,
                         loop::Algorithm algo, const plant::TargetFn& target, const Vec3& x0, double s0)
{
    cfg.validate();
    loop::LoopConfig lc{cfg.tracker_for(algo), cfg.admittance, cfg.dt};
    loop::ClosedLoop cl(path, lc, x0, s0);

    std::unique_ptr<plant::HumanModel> human;
    if (!cfg.force_csv.empty())
        human = std::make_unique<plant::HumanModel>(cfg.human, io::read_force_csv(cfg.force_csv));
    else
        human = std::make_unique<plant::HumanModel>(cfg.human, target);
    plant::NoiseSource noise(cfg.noise, cfg.seed);

    SimTrace tr;
    tr.algorithm = loop::algorithm_name(algo);
    tr.dt = cfg.dt;
    const std::size_t n = tick_count(cfg);
    tr.samples.reserve(n);
    tr.target.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        Vec3 F;
        try {
            F = human->force(cl.plant_state(), t);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::end_of_scenario)
                break;
            throw;
        }
        const Vec3 measured = F + noise.sensor();
        const Vec3 disturbance = algo == loop::Algorithm::gc ? noise.residual(cfg.dt) : Vec3::Zero();
        tr.samples.push_back(cl.step_force(measured, disturbance));
        tr.target.push_back(human->has_target() ? human->target(tr.samples.back().t) : Vec3::Constant(kNaN));
    }
    return tr;
}

/// Unit vector normal to the tangent, in the plane of the path where possible.
Vec3 fallback_normal(const path::ConstraintPath& path, const Vec3& tangent)
{
    const auto plane = metrics::task_plane(path);
    Vec3 n = plane.first.cross(plane.second).cross(tangent);
    if (n.norm() < 1e-9)
        n = Vec3::UnitZ().cross(tangent);
    if (n.norm() < 1e-9)
        n = Vec3::UnitY().cross(tangent);
    return n.normalized();
}

}  // namespace

Kind parse_kind(const std::string& name)
{
    if (name == "center_reaching")
        return Kind::center_reaching;
    if (name == "target_following")
        return Kind::target_following;
    if (name == "reaching_demo")
        return Kind::reaching_demo;
    throw Error(ErrorCode::validation_error,
                "unknown scenario '" + name + "' (expected center_reaching, target_following or reaching_demo)");
}

std::string kind_name(Kind k)
{
    switch (k) {
    case Kind::center_reaching: return "center_reaching";
    case Kind::target_following: return "target_following";
    case Kind::reaching_demo: return "reaching_demo";
    }
    return "unknown";
}

std::shared_ptr<const path::ConstraintPath> load_path_source(const PathSource& src)
{
    switch (src.type) {
    case PathSource::Type::shape:
        return std::make_shared<const path::ConstraintPath>(shapes::make_path(src.shape).path);
    case PathSource::Type::path_file:
        return std::make_shared<const path::ConstraintPath>(io::load_path(src.file));
    case PathSource::Type::csv_file: {
        const auto sp = path::resample_spatial(io::read_trajectory_csv(src.file), src.shape.delta);
        return std::make_shared<const path::ConstraintPath>(
            path::fit_path(sp, src.shape.num_basis, src.shape.ridge).path);
    }
    }
    throw Error(ErrorCode::invalid_parameter, "unknown path source");
}

void ScenarioConfig::validate() const
{
    auto fail = [](const std::string& m) { throw Error(ErrorCode::validation_error, m); };
    if (!(duration > 0.0) || !std::isfinite(duration))
        fail("duration must be positive");
    if (!(dt > 0.0) || !(dt < duration))
        fail("dt must be positive and shorter than the duration");
    if (algorithms.empty() && kind != Kind::reaching_demo)
        fail("at least one algorithm is required");
    admittance.validate();
    if (!(human.k_h > 0.0) || !(human.f_max > 0.0))
        fail("human k_h and f_max must be positive");
    if (!(target_following.speed >= 0.0) || target_following.s_start < 0.0)
        fail("target_following: speed and s_start must be >= 0");
    const auto& c = center_reaching;
    if (c.hold < 0.0 || !(c.approach > 0.0) || c.dwell < 0.0 || c.reach < 0.0 || c.wobble_radius < 0.0 ||
        c.wobble_hz < 0.0 || !(c.line_offset > 0.0))
        fail("center_reaching: timing and geometry parameters out of range");
    if (reaching_demo.c2_values.empty())
        fail("reaching_demo: c2_values must not be empty");
    for (double v : reaching_demo.c2_values)
        if (!(v >= 0.0))
            fail("reaching_demo: c2 values must be >= 0");
    if (reaching_demo.s_start < 0.0)
        fail("reaching_demo: s_start must be >= 0");
    if (metrics.length && !(*metrics.length > 0.0))
        fail("metrics.length must be positive");
    if (metrics.window < 1 || metrics.t0 < 0.0 || !(metrics.t0 < duration) || metrics.force_floor < 0.0)
        fail("metrics: window >= 1, 0 <= t0 < duration and force_floor >= 0 required");
    for (auto a : algorithms) {
        const auto tp = tracker_for(a);
        tp.lqt.validate();
        tp.vm.validate();
    }
}

loop::TrackerParams ScenarioConfig::tracker_for(loop::Algorithm algo) const
{
    auto tp = tracker;
    tp.algorithm = algo;
    if (vm_from_admittance)
        tp.vm = {admittance.k, admittance.b};
    return tp;
}

// ---------------------------------------------------------------------------

SimTrace run_center_reaching(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path,
                             loop::Algorithm algo)
{
    const auto& p = cfg.center_reaching;
    const double s_hat = p.s_hat < 0.0 ? 0.5 * path->length() : path->clamp(p.s_hat);
    const auto cp = path->eval(s_hat);
    const Vec3 tangent = cp.m_prime.normalized();

    Vec3 normal;
    double excursion;
    // a nearly straight neighbourhood has no usable osculating centre
    if (cp.normal_defined && cp.osc_radius < 10.0 * path->length()) {
        normal = cp.normal;
        const double reach = p.reach > 0.0 ? p.reach : (cfg.human.k_h + cfg.admittance.k) / cfg.human.k_h;
        excursion = reach * cp.osc_radius;
    } else {
        normal = fallback_normal(*path, tangent);
        excursion = p.line_offset;
    }
    const double wobble_amp =
        p.wobble_radius * (p.reach > 0.0 ? p.reach : (cfg.human.k_h + cfg.admittance.k) / cfg.human.k_h);
    const Vec3 start = cp.m;
    const Vec3 goal = start + excursion * normal;

    const double t_out = p.hold + p.approach;
    const double t_back = t_out + p.dwell;
    // tremor around the dwell point, faded in over the first second
    auto dwell_point = [=](double t) -> Vec3 {
        const double tau = t - t_out;
        const double ph = 2.0 * std::numbers::pi * p.wobble_hz * tau;
        const double amp = wobble_amp * min_jerk(tau);
        return goal + amp * (std::sin(ph) * tangent + 0.5 * (1.0 - std::cos(ph)) * normal);
    };
    auto target = [=](double t) -> Vec3 {
        if (t <= p.hold)
            return start;
        if (t < t_out)
            return start + min_jerk((t - p.hold) / p.approach) * (goal - start);
        if (t < t_back)
            return dwell_point(t);
        const Vec3 from = dwell_point(t_back);
        return from + min_jerk((t - t_back) / p.approach) * (start - from);
    };
    return run_closed_loop(cfg, std::move(path), algo, target, start, s_hat);
}

SimTrace run_target_following(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path,
                              loop::Algorithm algo)
{
    const auto& p = cfg.target_following;
    const double s0 = path->clamp(p.s_start);
    const auto* raw = path.get();
    auto target = [raw, s0, speed = p.speed](double t) { return raw->position(raw->clamp(s0 + speed * t)); };
    const Vec3 x0 = path->position(s0);
    return run_closed_loop(cfg, std::move(path), algo, target, x0, s0);
}

std::vector<SimTrace> run_reaching_demo(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path)
{
    cfg.validate();
    const auto& p = cfg.reaching_demo;
    const double s0 = path->clamp(p.s_start);
    const double goal_s = path->clamp(s0 + p.goal_distance);
    const Vec3 x = path->position(goal_s);
    const Vec3 x_dot = Vec3::Zero();
    const std::size_t n = tick_count(cfg);

    std::vector<SimTrace> out;
    for (double c2 : p.c2_values) {
        auto tp = cfg.tracker_for(loop::Algorithm::lqt);
        tp.lqt.c2 = Vec3::Constant(c2);
        loop::PhaseTracker tracker(path, tp, cfg.dt);
        tracker.reset(s0);

        SimTrace tr;
        tr.algorithm = "lqt";
        tr.label = "c2=" + fmt(c2);
        tr.dt = cfg.dt;
        tr.samples.reserve(n);
        for (std::size_t k = 1; k <= n; ++k) {
            loop::LoopSample smp;
            smp.t = static_cast<double>(k) * cfg.dt;
            smp.x = x;
            smp.phase = tracker.update(x, x_dot);
            Vec3 mpp;
            path->derivatives(smp.phase.s, smp.m, smp.m_prime, mpp);
            smp.diag = tracker.diagnostics();
            tr.samples.push_back(smp);
            tr.target.push_back(x);
        }
        out.push_back(std::move(tr));
    }
    return out;
}

std::vector<SimTrace> run_all(const ScenarioConfig& cfg, std::shared_ptr<const path::ConstraintPath> path)
{
    std::vector<SimTrace> out;
    switch (cfg.kind) {
    case Kind::reaching_demo:
        return run_reaching_demo(cfg, path);
    case Kind::center_reaching:
        for (auto a : cfg.algorithms)
            out.push_back(run_center_reaching(cfg, path, a));
        break;
    case Kind::target_following:
        for (auto a : cfg.algorithms)
            out.push_back(run_target_following(cfg, path, a));
        break;
    }
    return out;
}

// ---------------------------------------------------------------------------

RunMetrics evaluate(const SimTrace& trace, const ScenarioConfig& cfg, const path::ConstraintPath& path)
{
    if (trace.samples.size() < 4)
        throw Error(ErrorCode::invalid_input, "evaluate: trace too short");
    RunMetrics r;
    r.algorithm = trace.algorithm;
    r.label = trace.label;
    const auto n = trace.samples.size();

    std::vector<Vec3> x(n), m(n), mp(n), F(n), tgt;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& smp = trace.samples[i];
        x[i] = smp.x;
        m[i] = smp.m;
        mp[i] = smp.m_prime;
        F[i] = smp.F;
        s[i] = smp.phase.s;
        r.max_abs_s_dot = std::max(r.max_abs_s_dot, std::abs(smp.phase.s_dot));
        if (i > 0)
            r.max_abs_ds_rate = std::max(r.max_abs_ds_rate, std::abs(s[i] - s[i - 1]) / trace.dt);
    }
    r.final_s = s.back();

    const bool gc = trace.algorithm == "gc";
    const bool has_target = trace.target.size() == n && trace.target.front().allFinite();
    const auto& ref = has_target ? trace.target : m;
    r.error_target_cm = metrics::tracking_error_stats(x, ref);
    if (!gc)
        r.error_path_cm = metrics::tracking_error_stats(x, m);
    for (std::size_t i = 0; i < n; ++i)
        r.max_error_m = std::max(r.max_error_m, (x[i] - m[i]).norm());

    metrics::MetricsConfig mc;
    mc.T = static_cast<double>(n) * trace.dt;
    mc.t0 = cfg.metrics.t0;
    mc.L = cfg.metrics.length.value_or(path.length());
    mc.w = cfg.metrics.window;
    mc.dt = trace.dt;
    if (!gc)
        r.dsj_s = metrics::dsj_phase(s, mc);
    if (n >= static_cast<std::size_t>(mc.w) + 3)
        r.dsj_x = metrics::dsj_position(x, mc);

    const auto split = metrics::force_decomposition(F, mp);
    std::vector<double> norm(n), resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        norm[i] = split[i].norm;
        resid[i] = split[i].residual;
    }
    r.force_norm = metrics::mean_std(norm);
    r.force_normal = metrics::mean_std(resid);

    auto abs_all = [](std::vector<double> v) {
        for (auto& e : v)
            e = std::abs(e);
        return v;
    };
    const auto dnorm = abs_all(metrics::rate_of_change(norm, trace.dt));
    const auto darg_all =
        abs_all(metrics::rate_of_change(metrics::force_argument(F, metrics::task_plane(path)), trace.dt));
    // the direction of a vanishing force is meaningless
    std::vector<double> darg;
    for (std::size_t i = 0; i < n; ++i) {
        const bool ok = norm[i] >= cfg.metrics.force_floor && (i == 0 || norm[i - 1] >= cfg.metrics.force_floor) &&
                        (i + 1 == n || norm[i + 1] >= cfg.metrics.force_floor);
        if (ok)
            darg.push_back(darg_all[i]);
    }
    r.dforce_norm_p95 = metrics::quantile(dnorm, 0.95);
    if (!darg.empty()) {
        r.dforce_arg_p95 = metrics::quantile(darg, 0.95);
        r.dforce_arg_max = *std::max_element(darg.begin(), darg.end());
    }
    return r;
}

Json metrics_to_json(const RunMetrics& m)
{
    Json j;
    j["algorithm"] = m.algorithm;
    if (!m.label.empty())
        j["label"] = m.label;
    j["error_target_cm"] = {{"mean", m.error_target_cm.mean}, {"std", m.error_target_cm.std}};
    j["error_path_cm"] = {{"mean", m.error_path_cm.mean}, {"std", m.error_path_cm.std}};
    j["dsj_s"] = m.dsj_s ? Json(*m.dsj_s) : Json(nullptr);
    j["dsj_x"] = m.dsj_x;
    j["force_norm"] = {{"mean", m.force_norm.mean}, {"std", m.force_norm.std}};
    j["force_normal"] = {{"mean", m.force_normal.mean}, {"std", m.force_normal.std}};
    j["dforce_norm_p95"] = m.dforce_norm_p95;
    j["dforce_arg_p95"] = m.dforce_arg_p95;
    j["dforce_arg_max"] = m.dforce_arg_max;
    j["max_abs_s_dot"] = m.max_abs_s_dot;
    j["max_abs_ds_rate"] = m.max_abs_ds_rate;
    j["max_error_m"] = m.max_error_m;
    j["final_s"] = m.final_s;
    return j;
}

// ---------------------------------------------------------------------------

std::string trace_to_csv(const SimTrace& trace)
{
    std::string out =
        "t,x,y,z,vx,vy,vz,xdot_x,xdot_y,xdot_z,Fx,Fy,Fz,s,s_dot,s_ddot,mx,my,mz,ex,ey,ez,"
        "target_x,target_y,target_z,inner_iterations,converged,stalled,cost\n";
    out.reserve(trace.samples.size() * 420);
    auto put = [&out](double v) {
        out += fmt(v);
        out += ',';
    };
    auto put3 = [&put](const Vec3& v) {
        put(v.x());
        put(v.y());
        put(v.z());
    };
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const auto& s = trace.samples[i];
        put(s.t);
        put3(s.x);
        put3(s.v);
        put3(s.x_dot);
        put3(s.F);
        put(s.phase.s);
        put(s.phase.s_dot);
        put(s.phase.s_ddot);
        put3(s.m);
        put3(Vec3(s.x - s.m));
        put3(i < trace.target.size() ? trace.target[i] : Vec3::Constant(kNaN));
        out += std::to_string(s.diag.inner_iterations);
        out += s.diag.converged ? ",1" : ",0";
        out += s.diag.stalled ? ",1," : ",0,";
        out += fmt(s.diag.cost);
        out += '\n';
    }
    return out;
}

std::string traces_to_long_csv(const std::vector<SimTrace>& traces, int every)
{
    every = std::max(every, 1);
    std::string out = "run,t,quantity,value\n";
    for (const auto& tr : traces) {
        const std::string run = tr.label.empty() ? tr.algorithm : tr.algorithm + ":" + tr.label;
        for (std::size_t i = 0; i < tr.samples.size(); i += static_cast<std::size_t>(every)) {
            const auto& s = tr.samples[i];
            const std::string prefix = run + "," + fmt(s.t) + ",";
            const double e = i < tr.target.size() && tr.target[i].allFinite() ? (s.x - tr.target[i]).norm()
                                                                               : (s.x - s.m).norm();
            const std::pair<const char*, double> rows[] = {
                {"s", s.phase.s},   {"s_dot", s.phase.s_dot}, {"s_ddot", s.phase.s_ddot},
                {"error", e},       {"force_norm", s.F.norm()},
            };
            for (const auto& [q, v] : rows)
                out += prefix + q + "," + fmt(v) + "\n";
        }
    }
    return out;
}

namespace {
std::string run_name(const RunMetrics& r)
{
    return r.label.empty() ? r.algorithm : r.algorithm + " " + r.label;
}

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}
}  // namespace

std::string metrics_table_text(const std::vector<RunMetrics>& rows)
{
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %16s %12s %12s %16s\n", "run", "|e| [cm]", "DSJ(s)", "DSJ(x)",
                  "|F|-|F_tau| [N]");
    os << line;
    for (const auto& r : rows) {
        const std::string err = sci(r.error_target_cm.mean) + " +- " + sci(r.error_target_cm.std);
        const std::string eff = sci(r.force_normal.mean) + " +- " + sci(r.force_normal.std);
        std::snprintf(line, sizeof line, "%-14s %16s %12s %12s %16s\n", run_name(r).c_str(), err.c_str(),
                      r.dsj_s ? sci(*r.dsj_s).c_str() : "-", sci(r.dsj_x).c_str(), eff.c_str());
        os << line;
    }
    return os.str();
}

std::string metrics_table_csv(const std::vector<RunMetrics>& rows)
{
    std::string out = "run,error_mean_cm,error_std_cm,dsj_s,dsj_x,force_normal_mean,force_normal_std\n";
    for (const auto& r : rows) {
        out += run_name(r) + "," + fmt(r.error_target_cm.mean) + "," + fmt(r.error_target_cm.std) + "," +
               (r.dsj_s ? fmt(*r.dsj_s) : std::string()) + "," + fmt(r.dsj_x) + "," + fmt(r.force_normal.mean) +
               "," + fmt(r.force_normal.std) + "\n";
    }
    return out;
}

}  // namespace vfphase::scenario
