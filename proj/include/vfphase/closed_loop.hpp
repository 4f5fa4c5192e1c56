#pragma once
/**
 * @file  closed_loop.hpp
 * @brief Phase tracker selection and the tracker -> reference -> admittance
 *        loop shared by the batch scenarios and the interactive session.
 */

#include "vfphase/phase_lqt.hpp"
#include "vfphase/phase_vm.hpp"
#include "vfphase/plant.hpp"

#include <memory>
#include <string>

namespace vfphase::loop {

enum class Algorithm { gn, lqt, vm, gc };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);

/// Exponentially smoothed finite difference of measured positions.
class VelocityEstimator {
public:
    explicit VelocityEstimator(double alpha = 0.1) : alpha_(alpha) {}

    Vec3 update(const Vec3& x, double dt);
    void reset(const Vec3& x, const Vec3& v = Vec3::Zero());
    [[nodiscard]] const Vec3& value() const noexcept { return v_; }

private:
    double alpha_;
    bool primed_ = false;
    Vec3 prev_ = Vec3::Zero();
    Vec3 v_ = Vec3::Zero();
};

struct TrackerParams {
    Algorithm algorithm = Algorithm::lqt;
    lqt::LqtConfig lqt;          ///< lqt.dt may be an integer multiple of the loop period
    vm::VmParams vm;
    int gn_max_inner = 10;
    double velocity_alpha = 0.1;
};

struct TrackerDiagnostics {
    bool solved = false;         ///< an inner solver ran on this tick
    int inner_iterations = 0;
    bool converged = true;
    bool stalled = false;
    double cost = 0.0;
};

/**
 * Advances the phase state one loop period for the selected law.
 * The LQT solve runs every lqt.dt; in between, its first jerk sample is held
 * and integrated exactly at the loop period. In gc mode the phase is a
 * passive nearest-point observer that never feeds the plant.
 */
class PhaseTracker {
public:
    PhaseTracker(std::shared_ptr<const path::ConstraintPath> path, TrackerParams params, double loop_dt);

    lqt::PhaseState update(const Vec3& x, const Vec3& x_dot);
    void reset(double s0);
    void set_algorithm(Algorithm a);
    void set_params(const TrackerParams& params);
    void set_path(std::shared_ptr<const path::ConstraintPath> path);

    [[nodiscard]] const lqt::PhaseState& state() const noexcept { return state_; }
    [[nodiscard]] const TrackerParams& params() const noexcept { return params_; }
    [[nodiscard]] const TrackerDiagnostics& diagnostics() const noexcept { return diag_; }
    [[nodiscard]] const path::ConstraintPath& path() const noexcept { return *path_; }
    [[nodiscard]] int lqt_decimation() const noexcept { return decimation_; }

private:
    void rebuild();
    void finite_difference(double s_prev, double s_dot_prev);

    std::shared_ptr<const path::ConstraintPath> path_;
    TrackerParams params_;
    double dt_;
    int decimation_ = 1;
    std::unique_ptr<lqt::LqtTracker> lqt_;
    lqt::LqtSystem sub_;     // one loop period of the triple integrator
    double jerk_ = 0.0;
    long tick_ = 0;
    lqt::PhaseState state_;
    TrackerDiagnostics diag_;
};

struct LoopConfig {
    TrackerParams tracker;
    plant::AdmittanceParams admittance;
    double dt = 1e-3;
};

/// One loop period, recorded after the update.
struct LoopSample {
    double t = 0.0;
    Vec3 x = Vec3::Zero();       ///< end-effector position
    Vec3 v = Vec3::Zero();       ///< plant velocity
    Vec3 x_dot = Vec3::Zero();   ///< estimated velocity seen by the tracker
    Vec3 F = Vec3::Zero();       ///< measured interaction force used by the admittance
    lqt::PhaseState phase;
    Vec3 m = Vec3::Zero();       ///< m(s)
    Vec3 m_prime = Vec3::Zero();
    TrackerDiagnostics diag;
};

class ClosedLoop {
public:
    ClosedLoop(std::shared_ptr<const path::ConstraintPath> path, LoopConfig cfg, const Vec3& x0, double s0);

    /// Apply-force mode: F drives the admittance; `disturbance` acts on the plant but is not measured.
    LoopSample step_force(const Vec3& F, const Vec3& disturbance = Vec3::Zero());
    /// Drag mode: x is imposed directly and bypasses the plant.
    LoopSample step_drag(const Vec3& x);

    void reset(const Vec3& x0, double s0);
    void set_algorithm(Algorithm a);
    void set_tracker_params(const TrackerParams& p);
    void set_admittance(const plant::AdmittanceParams& p);
    void set_path(std::shared_ptr<const path::ConstraintPath> path, const Vec3& x0, double s0);

    [[nodiscard]] double time() const noexcept { return t_; }
    [[nodiscard]] double dt() const noexcept { return cfg_.dt; }
    [[nodiscard]] const plant::PlantState& plant_state() const noexcept { return plant_; }
    [[nodiscard]] const PhaseTracker& tracker() const noexcept { return tracker_; }
    [[nodiscard]] const LoopConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const path::ConstraintPath& path() const noexcept { return *path_; }
    [[nodiscard]] std::shared_ptr<const path::ConstraintPath> path_ptr() const noexcept { return path_; }
    /// Reference handed to the admittance for the next period.
    [[nodiscard]] Vec3 reference() const;

private:
    LoopSample record(const Vec3& F);

    std::shared_ptr<const path::ConstraintPath> path_;
    LoopConfig cfg_;
    PhaseTracker tracker_;
    VelocityEstimator velocity_;
    plant::PlantState plant_;
    long ticks_ = 0;
    double t_ = 0.0;
};

}  // namespace vfphase::loop
