#pragma once
/**
 * @file  phase_gn.hpp
 * @brief Gauss-Newton nearest-point phase update and the optimal phase velocity.
 */

#include "vfphase/path_model.hpp"

namespace vfphase::gn {

inline constexpr int kDefaultMaxInner = 10;
inline constexpr double kStepTolerance = 1e-9;       ///< [m]
inline constexpr double kStationarityTolerance = 1e-6;
inline constexpr double kSingularTolerance = 1e-9;

struct GnState {
    double s = 0.0;
    double last_delta_s = 0.0;  ///< last inner update actually applied [m]
    bool stalled = false;
    int iterations = 0;         ///< inner iterations used by the last call
};

/**
 * Iterates s <- clamp(s + m'^T (x - m) / |m'|^2) at most `max_inner` times.
 * Stops on |ds| < kStepTolerance or when the update is clipped at 0 or L.
 */
GnState gn_step(const path::ConstraintPath& path, const Vec3& x, GnState state,
                int max_inner = kDefaultMaxInner);

/// m'^T xdot / (1 - (x - m)^T m''), throws singular_phase_velocity near zero denominators.
double optimal_phase_velocity(const path::ConstraintPath& path, double s_star, const Vec3& x,
                              const Vec3& x_dot);

}  // namespace vfphase::gn
