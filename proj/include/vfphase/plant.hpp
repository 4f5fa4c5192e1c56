#pragma once
/**
 * @file  plant.hpp
 * @brief Admittance-controlled point-mass end effector and synthetic operators.
 */

#include "vfphase/path_io.hpp"
#include "vfphase/path_model.hpp"

#include <functional>
#include <optional>
#include <random>

namespace vfphase::plant {

/// M a + B v + K (x - m_ref) = F, isotropic gains.
struct AdmittanceParams {
    double m = 1.5;    ///< [kg]
    double b = 15.0;   ///< [N s/m]
    double k = 200.0;  ///< [N/m]

    void validate() const;
};

struct PlantState {
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
};

/// Semi-implicit Euler: v += a dt, then x += v dt.
PlantState admittance_step(const AdmittanceParams& p, const PlantState& st, const Vec3& m_ref, const Vec3& F,
                           double dt);

/// 1/2 m |v|^2 + 1/2 k |x - m_ref|^2.
double mechanical_energy(const AdmittanceParams& p, const PlantState& st, const Vec3& m_ref);

enum class HumanKind { spring_to_target, scripted_force, external };

/// Target position of a spring-to-target operator as a function of time.
using TargetFn = std::function<Vec3(double)>;

struct HumanParams {
    HumanKind kind = HumanKind::spring_to_target;
    double k_h = 50.0;      ///< [N/m]
    double f_max = 30.0;    ///< saturation of |F| [N]
};

/**
 * Synthetic operator. Spring-to-target pulls the end effector towards a
 * moving target, scripted-force replays a recorded trace (linear
 * interpolation), external returns whatever was last supplied.
 */
class HumanModel {
public:
    HumanModel(HumanParams params, TargetFn target);
    HumanModel(HumanParams params, io::ForceTrace trace);
    explicit HumanModel(HumanParams params);  ///< external

    /// Throws end_of_scenario when a scripted trace is exhausted.
    [[nodiscard]] Vec3 force(const PlantState& st, double t) const;
    [[nodiscard]] Vec3 target(double t) const;
    [[nodiscard]] bool has_target() const noexcept { return static_cast<bool>(target_); }

    void set_external(const Vec3& F) { external_ = F; }
    [[nodiscard]] const HumanParams& params() const noexcept { return params_; }

private:
    HumanParams params_;
    TargetFn target_;
    io::ForceTrace trace_;
    Vec3 external_ = Vec3::Zero();
};

/// Saturate |F| at f_max.
Vec3 saturate(const Vec3& F, double f_max);

/// Measurement and disturbance models added on top of the operator force.
struct NoiseParams {
    double force_sigma = 0.0;     ///< white force-sensor noise per axis [N]
    Vec3 gc_bias = Vec3::Zero();  ///< constant residual force acting only without a fixture [N]
    double gc_ou_sigma = 0.0;     ///< stationary std of the residual fluctuation [N]
    double gc_ou_tau = 0.5;       ///< correlation time of the fluctuation [s]
};

/// Seeded noise source. Sensor and residual use separate streams so the
/// sensor noise is identical whether or not the residual is drawn.
class NoiseSource {
public:
    NoiseSource(NoiseParams p, std::uint64_t seed);

    /// Sensor noise sample for one tick.
    Vec3 sensor();
    /// Residual disturbance for one tick (advances the OU state).
    Vec3 residual(double dt);

private:
    NoiseParams p_;
    std::mt19937_64 sensor_rng_;
    std::mt19937_64 residual_rng_;
    std::normal_distribution<double> sensor_normal_{0.0, 1.0};
    std::normal_distribution<double> residual_normal_{0.0, 1.0};
    Vec3 ou_ = Vec3::Zero();
};

}  // namespace vfphase::plant
