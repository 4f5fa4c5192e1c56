#include "vfphase/phase_vm.hpp"

#include "vfphase/error.hpp"

#include <cmath>

namespace vfphase::vm {

void VmParams::validate() const
{
    if (!(k > 0.0) || !(b > 0.0) || !std::isfinite(k) || !std::isfinite(b))
        throw Error(ErrorCode::invalid_parameter, "vm params: k and b must be positive");
}

double vm_phase_rate(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot, double s,
                     const VmParams& p)
{
    Vec3 m, mp, mpp;
    path.derivatives(s, m, mp, mpp);
    const double den = p.b * mp.squaredNorm();
    if (!(den > 0.0))
        throw Error(ErrorCode::singular_phase_velocity, "vm_phase_rate: degenerate tangent");
    return mp.dot(p.k * (x - m) + p.b * x_dot) / den;
}

Vec3 vm_force(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot, double s, double s_dot,
              const VmParams& p)
{
    Vec3 m, mp, mpp;
    path.derivatives(s, m, mp, mpp);
    return p.k * (x - m) + p.b * (x_dot - mp * s_dot);
}

double vm_step(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot, double s,
               const VmParams& p, double dt)
{
    if (!(dt > 0.0))
        throw Error(ErrorCode::invalid_parameter, "vm_step: dt must be positive");
    return path.clamp(s + vm_phase_rate(path, x, x_dot, s, p) * dt);
}

}  // namespace vfphase::vm
