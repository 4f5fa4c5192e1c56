#pragma once
/**
 * @file  phase_lqt.hpp
 * @brief Minimum-jerk phase planning: a triple integrator on (s, s_dot, s_ddot)
 *        driven by jerk, solved as an iteratively linearised tracking problem
 *        over a receding window.
 */

#include "vfphase/path_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace vfphase::lqt {

using Vector7d = Eigen::Matrix<double, 7, 1>;
using Matrix73d = Eigen::Matrix<double, 7, 3>;

struct PhaseState {
    double s = 0.0;       ///< [m]
    double s_dot = 0.0;   ///< [m/s]
    double s_ddot = 0.0;  ///< [m/s^2]

    [[nodiscard]] Eigen::Vector3d vec() const { return {s, s_dot, s_ddot}; }
    static PhaseState from(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
    [[nodiscard]] bool finite() const { return std::isfinite(s) && std::isfinite(s_dot) && std::isfinite(s_ddot); }
};

/// Batch prediction matrices: stacked states = Ss * s1 + Su * u.
struct LqtSystem {
    double dt = 0.0;
    int window = 0;
    Eigen::Matrix3d A;
    Eigen::Vector3d B;
    Eigen::MatrixXd Ss;  ///< (3T) x 3, block i = A^i
    Eigen::MatrixXd Su;  ///< (3T) x T, block (i, j) = A^(i-j-1) B for i > j

    [[nodiscard]] Eigen::VectorXd rollout(const Eigen::Vector3d& s1, const Eigen::VectorXd& u) const;
};

LqtSystem build_system(double dt, int window);

struct LqtConfig {
    Vec3 c1 = Vec3::Constant(47.8);  ///< weight on e [1/m^2]
    Vec3 c2 = Vec3::Constant(0.02);  ///< weight on e_dot [s^2/m^2]
    double c3 = 0.01;                ///< weight on s_ddot
    double R = 1e-5;                 ///< jerk weight
    int window = 50;                 ///< T_W
    double delta_min = 1e-6;         ///< stop when |du| falls below
    int max_iter = 5;                ///< I_MAX
    double dt = 1e-3;                ///< [s]
    /// false: advance the initial state inside every inner iteration (as the
    /// reference algorithm is written); true: iterate to convergence, then advance once.
    bool strict = false;

    void validate() const;
    /// Diagonal of the per-step precision block diag(c1, c2, c3).
    [[nodiscard]] Vector7d precision() const;
};

/// Stacked residual f = [e; e_dot; s_ddot] per window step and its per-step Jacobian.
struct Linearization {
    Eigen::VectorXd f;            ///< 7T
    std::vector<Matrix73d> J;     ///< T blocks d f_t / d (s, s_dot, s_ddot)
};

Linearization residual_and_jacobian(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot,
                                    const std::vector<PhaseState>& traj);

/// Unpack a stacked rollout vector into states.
std::vector<PhaseState> unstack(const Eigen::VectorXd& stacked);

/// Normal-equation pieces H = Su^T J^T Q J Su + R I and g = Su^T J^T Q f.
struct NormalEquations {
    Eigen::MatrixXd H;
    Eigen::VectorXd g;
};
NormalEquations normal_equations(const LqtSystem& sys, const Linearization& lin, const Vector7d& q, double R);

/// du* = -(H)^-1 (g + R u). Throws solver_failure when H is not positive definite.
Eigen::VectorXd delta_u_star(const LqtSystem& sys, const Linearization& lin, const Vector7d& q, double R,
                             const Eigen::VectorXd& u);

/// sum_t f_t^T Q f_t + R sum_t u_t^2.
double lqt_cost(const Eigen::VectorXd& f, const Eigen::VectorXd& u, const Vector7d& q, double R);

struct LqtStepReport {
    PhaseState new_state;
    int inner_iterations = 0;
    double final_delta_u_norm = 0.0;
    double cost_before = 0.0;
    double cost_after = 0.0;
    bool converged = false;
    bool clamped = false;
    double applied_jerk = 0.0;    ///< jerk of the last advance (0 when none happened)
    int advances = 0;             ///< integrator steps taken by this call
    std::vector<double> costs;    ///< cost at each inner linearisation point
};

/**
 * One call of the iterative solver. `u` is the control window: zeros for a
 * cold start, otherwise the shifted window left by the previous call. It is
 * updated in place.
 */
LqtStepReport lqt_step(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot,
                       const PhaseState& state, const LqtConfig& cfg, const LqtSystem& sys,
                       Eigen::VectorXd& u);

/// Stateful wrapper holding the system matrices and the warm-start window.
class LqtTracker {
public:
    explicit LqtTracker(LqtConfig cfg);

    LqtStepReport step(const path::ConstraintPath& path, const Vec3& x, const Vec3& x_dot,
                       const PhaseState& state);
    void reset();

    [[nodiscard]] const LqtConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const LqtSystem& system() const noexcept { return sys_; }
    [[nodiscard]] const Eigen::VectorXd& controls() const noexcept { return u_; }

private:
    LqtConfig cfg_;
    LqtSystem sys_;
    Eigen::VectorXd u_;
};

}  // namespace vfphase::lqt
