#pragma once
/**
 * @file  phase_vm.hpp
 * @brief Virtual-mechanism phase law: the phase rate that keeps the
 *        spring-damper coupling force orthogonal to the curve tangent.
 */

#include "vfphase/path_model.hpp"

namespace vfphase::vm {

struct VmParams {
    double k = 200.0;  ///< [N/m]
    double b = 15.0;   ///< [N s/m]

    void validate() const;
};

/// s_dot = (m'^T B m')^-1 m'^T (K (x - m) + B x_dot), K = k I, B = b I.
double vm_phase_rate(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot, double s,
                     const VmParams& p);

/// Coupling force K (x - m) + B (x_dot - m' s_dot) for a given phase rate.
Vec3 vm_force(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot, double s, double s_dot,
              const VmParams& p);

/// Explicit Euler step, clamped to [0, L].
double vm_step(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot, double s,
               const VmParams& p, double dt);

}  // namespace vfphase::vm
