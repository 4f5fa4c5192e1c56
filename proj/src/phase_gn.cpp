#include "vfphase/phase_gn.hpp"

#include "vfphase/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vfphase::gn {

GnState gn_step(const path::ConstraintPath& path, const Vec3& x, GnState state, int max_inner)
{
    if (max_inner < 1)
        throw Error(ErrorCode::invalid_parameter, "gn_step: max_inner must be >= 1");
    if (!x.allFinite() || !std::isfinite(state.s))
        throw Error(ErrorCode::invalid_input, "gn_step: non-finite input");

    const double L = path.length();
    double s = path.clamp(state.s);
    state.iterations = 0;
    state.last_delta_s = 0.0;
    Vec3 m, mp, mpp;
    for (int it = 0; it < max_inner; ++it) {
        path.derivatives(s, m, mp, mpp);
        const double speed2 = mp.squaredNorm();
        if (speed2 <= 0.0)
            break;
        // H = 2 J^T J with J = -m'; gradient 2 J^T (x - m)
        const double ds = mp.dot(x - m) / speed2;
        const double raw = s + ds;
        const double next = std::clamp(raw, 0.0, L);
        state.last_delta_s = next - s;
        s = next;
        ++state.iterations;
        if (std::abs(ds) < kStepTolerance || next != raw)
            break;
    }
    state.s = s;
    const bool interior = s > 0.0 && s < L;
    state.stalled = interior && std::abs(state.last_delta_s) < kStepTolerance &&
                    std::abs(path.stationarity(x, s)) > kStationarityTolerance;
    return state;
}

double optimal_phase_velocity(const path::ConstraintPath& path, double s_star, const Vec3& x,
                              const Vec3& x_dot)
{
    Vec3 m, mp, mpp;
    path.derivatives(s_star, m, mp, mpp);
    const double den = 1.0 - (x - m).dot(mpp);
    if (std::abs(den) < kSingularTolerance) {
        std::ostringstream os;
        os << "optimal phase velocity is singular at s = " << s_star << " (denominator " << den << ")";
        throw Error(ErrorCode::singular_phase_velocity, os.str());
    }
    return mp.dot(x_dot) / den;
}

}  // namespace vfphase::gn
