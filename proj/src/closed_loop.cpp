#include "vfphase/closed_loop.hpp"

#include "vfphase/error.hpp"
#include "vfphase/phase_gn.hpp"

#include <cmath>

namespace vfphase::loop {

Algorithm parse_algorithm(const std::string& name)
{
    if (name == "gn")
        return Algorithm::gn;
    if (name == "lqt")
        return Algorithm::lqt;
    if (name == "vm")
        return Algorithm::vm;
    if (name == "gc")
        return Algorithm::gc;
    throw Error(ErrorCode::validation_error, "unknown algorithm '" + name + "' (expected gn, lqt, vm or gc)");
}

std::string algorithm_name(Algorithm a)
{
    switch (a) {
    case Algorithm::gn: return "gn";
    case Algorithm::lqt: return "lqt";
    case Algorithm::vm: return "vm";
    case Algorithm::gc: return "gc";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

Vec3 VelocityEstimator::update(const Vec3& x, double dt)
{
    if (!primed_) {
        primed_ = true;
        prev_ = x;
        return v_;
    }
    v_ = (1.0 - alpha_) * v_ + alpha_ * (x - prev_) / dt;
    prev_ = x;
    return v_;
}

void VelocityEstimator::reset(const Vec3& x, const Vec3& v)
{
    primed_ = true;
    prev_ = x;
    v_ = v;
}

// ---------------------------------------------------------------------------

PhaseTracker::PhaseTracker(std::shared_ptr<const path::ConstraintPath> path, TrackerParams params, double loop_dt)
    : path_(std::move(path)), params_(std::move(params)), dt_(loop_dt)
{
    if (!path_)
        throw Error(ErrorCode::invalid_parameter, "tracker needs a path");
    if (!(dt_ > 0.0))
        throw Error(ErrorCode::invalid_parameter, "tracker loop period must be positive");
    rebuild();
}

void PhaseTracker::rebuild()
{
    if (params_.gn_max_inner < 1)
        throw Error(ErrorCode::invalid_parameter, "gn_max_inner must be >= 1");
    if (!(params_.velocity_alpha > 0.0 && params_.velocity_alpha <= 1.0))
        throw Error(ErrorCode::invalid_parameter, "velocity_alpha must lie in (0, 1]");
    params_.vm.validate();
    params_.lqt.validate();
    const double ratio = params_.lqt.dt / dt_;
    decimation_ = static_cast<int>(std::lround(ratio));
    if (decimation_ < 1 || std::abs(ratio - decimation_) > 1e-9 * ratio)
        throw Error(ErrorCode::invalid_parameter, "lqt.dt must be an integer multiple of the loop period");
    lqt_ = std::make_unique<lqt::LqtTracker>(params_.lqt);
    sub_ = lqt::build_system(dt_, 2);
    jerk_ = 0.0;
    tick_ = 0;
}

void PhaseTracker::reset(double s0)
{
    state_ = {path_->clamp(s0), 0.0, 0.0};
    diag_ = {};
    lqt_->reset();
    jerk_ = 0.0;
    tick_ = 0;
}

void PhaseTracker::set_algorithm(Algorithm a)
{
    if (a == params_.algorithm)
        return;
    params_.algorithm = a;
    lqt_->reset();
    jerk_ = 0.0;
    tick_ = 0;
}

void PhaseTracker::set_params(const TrackerParams& params)
{
    const auto backup = params_;
    params_ = params;
    try {
        rebuild();
    } catch (...) {
        params_ = backup;
        rebuild();
        throw;
    }
}

void PhaseTracker::set_path(std::shared_ptr<const path::ConstraintPath> path)
{
    if (!path)
        throw Error(ErrorCode::invalid_parameter, "tracker needs a path");
    path_ = std::move(path);
    reset(0.0);
}

void PhaseTracker::finite_difference(double s_prev, double s_dot_prev)
{
    state_.s_dot = (state_.s - s_prev) / dt_;
    state_.s_ddot = (state_.s_dot - s_dot_prev) / dt_;
}

lqt::PhaseState PhaseTracker::update(const Vec3& x, const Vec3& x_dot)
{
    diag_ = {};
    const double s_prev = state_.s;
    const double s_dot_prev = state_.s_dot;
    const auto& path = *path_;

    switch (params_.algorithm) {
    case Algorithm::gn:
    case Algorithm::gc: {
        const auto st = gn::gn_step(path, x, {s_prev, 0.0, false, 0}, params_.gn_max_inner);
        state_.s = st.s;
        diag_.solved = true;
        diag_.inner_iterations = st.iterations;
        diag_.stalled = st.stalled;
        diag_.cost = path.cost(x, st.s);
        finite_difference(s_prev, s_dot_prev);
        break;
    }
    case Algorithm::vm: {
        const double rate = vm::vm_phase_rate(path, x, x_dot, s_prev, params_.vm);
        const double raw = s_prev + rate * dt_;
        state_.s = path.clamp(raw);
        state_.s_dot = state_.s == raw ? rate : (state_.s - s_prev) / dt_;
        state_.s_ddot = (state_.s_dot - s_dot_prev) / dt_;
        diag_.solved = true;
        diag_.cost = path.cost(x, state_.s);
        break;
    }
    case Algorithm::lqt: {
        bool snapped = false;
        if (tick_ % decimation_ == 0) {
            const auto rep = lqt_->step(path, x, x_dot, state_);
            diag_.solved = true;
            diag_.inner_iterations = rep.inner_iterations;
            diag_.converged = rep.converged;
            diag_.cost = rep.cost_after;
            if (rep.advances == 1) {
                jerk_ = rep.applied_jerk;
            } else {
                state_ = rep.new_state;
                jerk_ = 0.0;
                snapped = true;
            }
        }
        if (!snapped) {
            Eigen::Vector3d v = sub_.A * state_.vec() + sub_.B * jerk_;
            if (v[0] < 0.0 || v[0] > path.length()) {
                v[0] = path.clamp(v[0]);
                v[1] = 0.0;
            }
            state_ = lqt::PhaseState::from(v);
        }
        break;
    }
    }
    ++tick_;
    if (!state_.finite())
        throw Error(ErrorCode::numerical_divergence, "phase state became non-finite");
    return state_;
}

// ---------------------------------------------------------------------------

ClosedLoop::ClosedLoop(std::shared_ptr<const path::ConstraintPath> path, LoopConfig cfg, const Vec3& x0, double s0)
    : path_(path), cfg_(std::move(cfg)), tracker_(path, cfg_.tracker, cfg_.dt),
      velocity_(cfg_.tracker.velocity_alpha)
{
    cfg_.admittance.validate();
    reset(x0, s0);
}

void ClosedLoop::reset(const Vec3& x0, double s0)
{
    if (!x0.allFinite() || !std::isfinite(s0))
        throw Error(ErrorCode::invalid_input, "closed loop reset: non-finite initial state");
    plant_ = {x0, Vec3::Zero()};
    velocity_ = VelocityEstimator(cfg_.tracker.velocity_alpha);
    velocity_.reset(x0);
    tracker_.reset(s0);
    ticks_ = 0;
    t_ = 0.0;
}

void ClosedLoop::set_algorithm(Algorithm a)
{
    tracker_.set_algorithm(a);
    cfg_.tracker.algorithm = a;
}

void ClosedLoop::set_tracker_params(const TrackerParams& p)
{
    tracker_.set_params(p);
    cfg_.tracker = p;
}

void ClosedLoop::set_admittance(const plant::AdmittanceParams& p)
{
    p.validate();
    cfg_.admittance = p;
}

void ClosedLoop::set_path(std::shared_ptr<const path::ConstraintPath> path, const Vec3& x0, double s0)
{
    tracker_.set_path(path);
    path_ = std::move(path);
    reset(x0, s0);
}

Vec3 ClosedLoop::reference() const
{
    if (cfg_.tracker.algorithm == Algorithm::gc)
        return plant_.pos;
    return path_->position(tracker_.state().s);
}

LoopSample ClosedLoop::step_force(const Vec3& F, const Vec3& disturbance)
{
    if (!F.allFinite() || !disturbance.allFinite())
        throw Error(ErrorCode::rejected_input, "non-finite force input");
    plant_ = plant::admittance_step(cfg_.admittance, plant_, reference(), F + disturbance, cfg_.dt);
    t_ = static_cast<double>(++ticks_) * cfg_.dt;
    const Vec3 xd = velocity_.update(plant_.pos, cfg_.dt);
    tracker_.update(plant_.pos, xd);
    return record(F);
}

LoopSample ClosedLoop::step_drag(const Vec3& x)
{
    if (!x.allFinite())
        throw Error(ErrorCode::rejected_input, "non-finite position input");
    plant_.vel = (x - plant_.pos) / cfg_.dt;
    plant_.pos = x;
    t_ = static_cast<double>(++ticks_) * cfg_.dt;
    const Vec3 xd = velocity_.update(plant_.pos, cfg_.dt);
    tracker_.update(plant_.pos, xd);
    return record(Vec3::Zero());
}

LoopSample ClosedLoop::record(const Vec3& F)
{
    LoopSample s;
    s.t = t_;
    s.x = plant_.pos;
    s.v = plant_.vel;
    s.x_dot = velocity_.value();
    s.F = F;
    s.phase = tracker_.state();
    Vec3 mpp;
    path_->derivatives(s.phase.s, s.m, s.m_prime, mpp);
    s.diag = tracker_.diagnostics();
    return s;
}

}  // namespace vfphase::loop
