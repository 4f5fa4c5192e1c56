#include "vfphase/phase_lqt.hpp"

#include "vfphase/error.hpp"

#include <cmath>
#include <sstream>

namespace vfphase::lqt {

// ---------------------------------------------------------------------------
// System

Eigen::VectorXd LqtSystem::rollout(const Eigen::Vector3d& s1, const Eigen::VectorXd& u) const
{
    return Ss * s1 + Su * u;
}

LqtSystem build_system(double dt, int window)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw Error(ErrorCode::invalid_parameter, "build_system: dt must be positive");
    if (window < 2)
        throw Error(ErrorCode::invalid_parameter, "build_system: window must be >= 2");

    LqtSystem sys;
    sys.dt = dt;
    sys.window = window;
    sys.A << 1.0, dt, 0.5 * dt * dt,
             0.0, 1.0, dt,
             0.0, 0.0, 1.0;
    sys.B << 0.0, 0.0, dt;

    const int T = window;
    sys.Ss.resize(3 * T, 3);
    sys.Su = Eigen::MatrixXd::Zero(3 * T, T);
    Eigen::Matrix3d Ak = Eigen::Matrix3d::Identity();
    // powers[k] = A^k B
    std::vector<Eigen::Vector3d> powers(T);
    Eigen::Vector3d AkB = sys.B;
    for (int k = 0; k < T; ++k) {
        sys.Ss.block(3 * k, 0, 3, 3) = Ak;
        Ak = sys.A * Ak;
        powers[k] = AkB;
        AkB = sys.A * AkB;
    }
    for (int i = 1; i < T; ++i)
        for (int j = 0; j < i; ++j)
            sys.Su.block(3 * i, j, 3, 1) = powers[i - j - 1];
    return sys;
}

// ---------------------------------------------------------------------------
// Configuration

void LqtConfig::validate() const
{
    auto bad = [](const std::string& msg) { throw Error(ErrorCode::invalid_parameter, "lqt config: " + msg); };
    if (!(c1.minCoeff() > 0.0))
        bad("c1 must be positive componentwise");
    if (!(c2.minCoeff() >= 0.0) || !(c3 >= 0.0) || !(R >= 0.0))
        bad("weights must be non-negative");
    if (!c1.allFinite() || !c2.allFinite() || !std::isfinite(c3) || !std::isfinite(R))
        bad("weights must be finite");
    if (window < 2)
        bad("window must be >= 2");
    if (max_iter < 1)
        bad("max_iter must be >= 1");
    if (!(delta_min >= 0.0))
        bad("delta_min must be non-negative");
    if (!(dt > 0.0) || !std::isfinite(dt))
        bad("dt must be positive");
}

Vector7d LqtConfig::precision() const
{
    Vector7d q;
    q << c1, c2, c3;
    return q;
}

// ---------------------------------------------------------------------------
// Linearisation

std::vector<PhaseState> unstack(const Eigen::VectorXd& stacked)
{
    std::vector<PhaseState> out(static_cast<std::size_t>(stacked.size() / 3));
    for (std::size_t t = 0; t < out.size(); ++t)
        out[t] = PhaseState::from(stacked.segment<3>(3 * static_cast<Eigen::Index>(t)));
    return out;
}

Linearization residual_and_jacobian(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot,
                                    const std::vector<PhaseState>& traj)
{
    if (traj.empty())
        throw Error(ErrorCode::invalid_parameter, "residual_and_jacobian: empty trajectory");
    Linearization lin;
    const auto T = static_cast<Eigen::Index>(traj.size());
    lin.f.resize(7 * T);
    lin.J.resize(traj.size());
    Vec3 m, mp, mpp;
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& st = traj[static_cast<std::size_t>(t)];
        path.derivatives(st.s, m, mp, mpp);
        lin.f.segment<3>(7 * t) = x - m;
        lin.f.segment<3>(7 * t + 3) = x_dot - mp * st.s_dot;
        lin.f[7 * t + 6] = st.s_ddot;

        Matrix73d& J = lin.J[static_cast<std::size_t>(t)];
        J.setZero();
        J.block<3, 1>(0, 0) = -mp;
        J.block<3, 1>(3, 0) = -mpp * st.s_dot;
        J.block<3, 1>(3, 1) = -mp;
        J(6, 2) = 1.0;
    }
    return lin;
}

NormalEquations normal_equations(const LqtSystem& sys, const Linearization& lin, const Vector7d& q, double R)
{
    const int T = sys.window;
    if (static_cast<int>(lin.J.size()) != T || lin.f.size() != 7 * T)
        throw Error(ErrorCode::invalid_parameter, "normal_equations: linearisation does not match the window");
    NormalEquations ne;
    ne.H = R * Eigen::MatrixXd::Identity(T, T);
    ne.g = Eigen::VectorXd::Zero(T);
    const auto Q = q.asDiagonal();
    // Su block row t only couples controls j < t.
    for (int t = 1; t < T; ++t) {
        const Matrix73d& J = lin.J[static_cast<std::size_t>(t)];
        const Eigen::Matrix3d M = J.transpose() * Q * J;
        const Eigen::Vector3d v = J.transpose() * (q.cwiseProduct(lin.f.segment<7>(7 * t)));
        const auto S = sys.Su.block(3 * t, 0, 3, t);
        ne.H.topLeftCorner(t, t).noalias() += S.transpose() * M * S;
        ne.g.head(t).noalias() += S.transpose() * v;
    }
    return ne;
}

Eigen::VectorXd delta_u_star(const LqtSystem& sys, const Linearization& lin, const Vector7d& q, double R,
                             const Eigen::VectorXd& u)
{
    if (u.size() != sys.window)
        throw Error(ErrorCode::invalid_parameter, "delta_u_star: control window has the wrong size");
    const NormalEquations ne = normal_equations(sys, lin, q, R);
    Eigen::LLT<Eigen::MatrixXd> llt(ne.H);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::solver_failure, "delta_u_star: normal-equation matrix is not positive definite");
    Eigen::VectorXd du = llt.solve(-ne.g - R * u);
    if (!du.allFinite())
        throw Error(ErrorCode::solver_failure, "delta_u_star: non-finite solution");
    return du;
}

double lqt_cost(const Eigen::VectorXd& f, const Eigen::VectorXd& u, const Vector7d& q, double R)
{
    double c = 0.0;
    for (Eigen::Index t = 0; t + 7 <= f.size(); t += 7)
        c += f.segment<7>(t).cwiseAbs2().dot(q);
    return c + R * u.squaredNorm();
}

// ---------------------------------------------------------------------------
// Solver

namespace {

void shift_window(Eigen::VectorXd& u)
{
    const Eigen::Index T = u.size();
    for (Eigen::Index i = 0; i + 1 < T; ++i)
        u[i] = u[i + 1];
}

double window_cost(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot,
                   const LqtSystem& sys, const Eigen::Vector3d& s1, const Eigen::VectorXd& u,
                   const Vector7d& q, double R)
{
    const auto lin = residual_and_jacobian(path, x, x_dot, unstack(sys.rollout(s1, u)));
    return lqt_cost(lin.f, u, q, R);
}

}  // namespace

LqtStepReport lqt_step(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot,
                       const PhaseState& state, const LqtConfig& cfg, const LqtSystem& sys,
                       Eigen::VectorXd& u)
{
    if (!state.finite() || !x.allFinite() || !x_dot.allFinite())
        throw Error(ErrorCode::numerical_divergence, "lqt_step: non-finite state or measurement");
    if (sys.window != cfg.window || sys.dt != cfg.dt)
        throw Error(ErrorCode::invalid_parameter, "lqt_step: system does not match the configuration");
    if (u.size() != cfg.window)
        u = Eigen::VectorXd::Zero(cfg.window);

    const Vector7d q = cfg.precision();
    LqtStepReport rep;
    Eigen::Vector3d s1 = state.vec();

    auto advance = [&] {
        rep.applied_jerk = u[0];
        s1 = sys.A * s1 + sys.B * u[0];
        shift_window(u);
        ++rep.advances;
    };

    for (int it = 0; it < cfg.max_iter; ++it) {
        const auto lin = residual_and_jacobian(path, x, x_dot, unstack(sys.rollout(s1, u)));
        const double c = lqt_cost(lin.f, u, q, cfg.R);
        if (it == 0)
            rep.cost_before = c;
        rep.costs.push_back(c);

        const Eigen::VectorXd du = delta_u_star(sys, lin, q, cfg.R, u);
        ++rep.inner_iterations;
        rep.final_delta_u_norm = du.norm();
        if (rep.final_delta_u_norm < cfg.delta_min) {
            rep.converged = true;
            break;
        }
        u += du;
        if (!cfg.strict)
            advance();
    }
    if (cfg.strict)
        advance();

    if (!s1.allFinite() || !u.allFinite())
        throw Error(ErrorCode::numerical_divergence, "lqt_step: phase state diverged");

    const double L = path.length();
    if (s1[0] < 0.0 || s1[0] > L) {
        s1[0] = std::clamp(s1[0], 0.0, L);
        s1[1] = 0.0;
        rep.clamped = true;
    }
    rep.new_state = PhaseState::from(s1);
    rep.cost_after = window_cost(path, x, x_dot, sys, s1, u, q, cfg.R);
    return rep;
}

LqtTracker::LqtTracker(LqtConfig cfg) : cfg_(std::move(cfg))
{
    cfg_.validate();
    sys_ = build_system(cfg_.dt, cfg_.window);
    u_ = Eigen::VectorXd::Zero(cfg_.window);
}

LqtStepReport LqtTracker::step(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot,
                               const PhaseState& state)
{
    return lqt_step(path, x, x_dot, state, cfg_, sys_, u_);
}

void LqtTracker::reset()
{
    u_.setZero();
}

}  // namespace vfphase::lqt
