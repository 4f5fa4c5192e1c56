#include "vfphase/plant.hpp"

#include "vfphase/error.hpp"

#include <algorithm>
#include <cmath>

namespace vfphase::plant {

void AdmittanceParams::validate() const
{
    if (!(m > 0.0) || !(b > 0.0) || !(k > 0.0) || !std::isfinite(m) || !std::isfinite(b) || !std::isfinite(k))
        throw Error(ErrorCode::invalid_parameter, "admittance params: m, b and k must be positive");
}

PlantState admittance_step(const AdmittanceParams& p, const PlantState& st, const Vec3& m_ref, const Vec3& F,
                           double dt)
{
    if (!(dt > 0.0))
        throw Error(ErrorCode::invalid_parameter, "admittance_step: dt must be positive");
    const Vec3 a = (F - p.b * st.vel - p.k * (st.pos - m_ref)) / p.m;
    PlantState next;
    next.vel = st.vel + a * dt;
    next.pos = st.pos + next.vel * dt;
    if (!next.pos.allFinite() || !next.vel.allFinite())
        throw Error(ErrorCode::numerical_divergence, "admittance_step: state became non-finite");
    return next;
}

double mechanical_energy(const AdmittanceParams& p, const PlantState& st, const Vec3& m_ref)
{
    return 0.5 * p.m * st.vel.squaredNorm() + 0.5 * p.k * (st.pos - m_ref).squaredNorm();
}

Vec3 saturate(const Vec3& F, double f_max)
{
    const double n = F.norm();
    return n > f_max && n > 0.0 ? Vec3(F * (f_max / n)) : F;
}

// ---------------------------------------------------------------------------

HumanModel::HumanModel(HumanParams params, TargetFn target)
    : params_(params), target_(std::move(target))
{
    params_.kind = HumanKind::spring_to_target;
    if (!(params_.k_h > 0.0))
        throw Error(ErrorCode::invalid_parameter, "spring-to-target human needs k_h > 0");
    if (!(params_.f_max > 0.0))
        throw Error(ErrorCode::invalid_parameter, "human f_max must be positive");
    if (!target_)
        throw Error(ErrorCode::invalid_parameter, "spring-to-target human needs a target");
}

HumanModel::HumanModel(HumanParams params, io::ForceTrace trace)
    : params_(params), trace_(std::move(trace))
{
    params_.kind = HumanKind::scripted_force;
    if (trace_.t.empty() || trace_.t.size() != trace_.force.size())
        throw Error(ErrorCode::invalid_input, "scripted human needs a non-empty force trace");
}

HumanModel::HumanModel(HumanParams params) : params_(params)
{
    params_.kind = HumanKind::external;
}

Vec3 HumanModel::target(double t) const
{
    return target_ ? target_(t) : Vec3::Zero();
}

Vec3 HumanModel::force(const PlantState& st, double t) const
{
    switch (params_.kind) {
    case HumanKind::spring_to_target:
        return saturate(params_.k_h * (target_(t) - st.pos), params_.f_max);
    case HumanKind::scripted_force: {
        const auto& ts = trace_.t;
        constexpr double slack = 1e-9;
        if (t < ts.front() - slack || t > ts.back() + slack)
            throw Error(ErrorCode::end_of_scenario, "scripted force trace exhausted");
        const auto it = std::upper_bound(ts.begin(), ts.end(), t);
        if (it == ts.begin())
            return trace_.force.front();
        if (it == ts.end())
            return trace_.force.back();
        const auto i = static_cast<std::size_t>(it - ts.begin());
        const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
        return (1.0 - w) * trace_.force[i - 1] + w * trace_.force[i];
    }
    case HumanKind::external:
        return external_;
    }
    return Vec3::Zero();
}

// ---------------------------------------------------------------------------

NoiseSource::NoiseSource(NoiseParams p, std::uint64_t seed)
    : p_(p), sensor_rng_(seed), residual_rng_(seed ^ 0x9e3779b97f4a7c15ULL)
{
    if (p_.force_sigma < 0.0 || p_.gc_ou_sigma < 0.0 || !(p_.gc_ou_tau > 0.0))
        throw Error(ErrorCode::invalid_parameter, "noise params: sigmas must be >= 0 and tau > 0");
}

Vec3 NoiseSource::sensor()
{
    if (p_.force_sigma == 0.0)
        return Vec3::Zero();
    const double a = sensor_normal_(sensor_rng_);
    const double b = sensor_normal_(sensor_rng_);
    const double c = sensor_normal_(sensor_rng_);
    return p_.force_sigma * Vec3(a, b, c);
}

Vec3 NoiseSource::residual(double dt)
{
    if (p_.gc_ou_sigma > 0.0) {
        const double decay = std::exp(-dt / p_.gc_ou_tau);
        const double scale = p_.gc_ou_sigma * std::sqrt(1.0 - decay * decay);
        const double a = residual_normal_(residual_rng_);
        const double b = residual_normal_(residual_rng_);
        const double c = residual_normal_(residual_rng_);
        ou_ = decay * ou_ + scale * Vec3(a, b, c);
    }
    return p_.gc_bias + ou_;
}

}  // namespace vfphase::plant
